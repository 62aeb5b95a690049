#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

namespace oracle {

double dft_power(const std::vector<double>& x, double f) {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double ph = -2.0 * std::numbers::pi * f * static_cast<double>(n);
        re += x[n] * std::cos(ph);
        im += x[n] * std::sin(ph);
    }
    return re * re + im * im;
}

double butterworth_bandpass_mag2(int n, double low_hz, double high_hz, double fs, double f_hz) {
    auto warp = [fs](double f) { return std::tan(std::numbers::pi * f / fs); };
    const double wl = warp(low_hz), wh = warp(high_hz), w = warp(f_hz);
    const double x = (w * w - wl * wh) / (w * (wh - wl));
    return 1.0 / (1.0 + std::pow(x * x, n));
}

double coverage(const std::vector<std::vector<double>>& x,
                const std::vector<std::vector<double>>& u, double d) {
    std::size_t far = 0;
    for (const auto& p : x) {
        bool near = false;
        for (const auto& q : u) {
            double s = 0.0;
            for (std::size_t k = 0; k < p.size(); ++k) s += (p[k] - q[k]) * (p[k] - q[k]);
            if (std::sqrt(s) <= d) {
                near = true;
                break;
            }
        }
        if (!near) ++far;
    }
    return static_cast<double>(far) / static_cast<double>(x.size());
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Hrv hrv(const std::vector<double>& nn) {
    const double n = static_cast<double>(nn.size());
    double mean = 0.0;
    for (double v : nn) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : nn) var += (v - mean) * (v - mean);
    var /= n;
    std::vector<double> d;
    for (std::size_t i = 1; i < nn.size(); ++i) d.push_back(nn[i] - nn[i - 1]);
    const double m = static_cast<double>(d.size());
    double dmean = 0.0, sq = 0.0, c20 = 0.0, c50 = 0.0;
    for (double v : d) {
        dmean += v;
        sq += v * v;
        c20 += std::abs(v) > 20.0;
        c50 += std::abs(v) > 50.0;
    }
    dmean /= m;
    double dvar = 0.0;
    for (double v : d) dvar += (v - dmean) * (v - dmean);
    dvar /= m;
    const double med = median(nn);
    std::vector<double> dev;
    for (double v : nn) dev.push_back(std::abs(v - med));
    Hrv h{};
    h.ibi = mean;
    h.bpm = 60000.0 / mean;
    h.sdnn = std::sqrt(var);
    h.sdsd = std::sqrt(dvar);
    h.rmssd = std::sqrt(sq / m);
    h.pnn20 = c20 / m;
    h.pnn50 = c50 / m;
    h.mad = median(dev);
    h.sd1 = std::sqrt(dvar / 2.0);
    h.sd2 = std::sqrt(std::max(0.0, 2.0 * var - dvar / 2.0));
    h.area = std::numbers::pi * h.sd1 * h.sd2;
    h.ratio = h.sd2 > 0 ? h.sd1 / h.sd2 : 0.0;
    return h;
}

ProcessResult run(const std::vector<std::string>& argv) {
    int pipefd[2];
    if (pipe(pipefd) != 0) throw std::runtime_error("pipe failed");
    // stderr goes to a scratch file so a chatty child cannot block on it.
    char err_path[] = "/tmp/pulselabel-stderr-XXXXXX";
    const int err_fd = mkstemp(err_path);
    if (err_fd < 0) throw std::runtime_error("mkstemp failed");
    const pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
        dup2(pipefd[1], STDOUT_FILENO);
        dup2(err_fd, STDERR_FILENO);
        close(err_fd);
        close(pipefd[0]);
        close(pipefd[1]);
        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execv(args[0], args.data());
        _exit(127);
    }
    close(pipefd[1]);
    ProcessResult r;
    char buf[4096];
    ssize_t k;
    while ((k = read(pipefd[0], buf, sizeof buf)) > 0) r.out.append(buf, static_cast<std::size_t>(k));
    close(pipefd[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    r.status = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    lseek(err_fd, 0, SEEK_SET);
    while ((k = read(err_fd, buf, sizeof buf)) > 0) r.err.append(buf, static_cast<std::size_t>(k));
    close(err_fd);
    unlink(err_path);
    return r;
}

std::string temp_dir(const std::string& tag) {
    static std::mt19937_64 rng{std::random_device{}()};
    auto p = std::filesystem::temp_directory_path() /
             ("pulselabel-" + tag + "-" + std::to_string(getpid()) + "-" + std::to_string(rng() % 1000000));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

}  // namespace oracle
