#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <cstdlib>
#include <sys/wait.h>

#include "paxray/paxray.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path source_dir() { return PAXRAY_SOURCE_DIR; }
inline fs::path golden_dir() { return source_dir() / "tests" / "golden"; }
inline fs::path data_dir() { return source_dir() / "data"; }

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::mt19937_64 names(std::random_device{}());
        path_ = fs::temp_directory_path() / ("paxray-" + tag + "-" + std::to_string(names()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

/// Seeded generator with the handful of draws the tests need.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}

    double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Integer in [lo, hi].
    int integer(int lo, int hi) { return lo + static_cast<int>(g_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    bool chance(double p) { return uniform() < p; }
    std::uint64_t bits() { return g_(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(integer(0, static_cast<int>(i) - 1))]);
    }

private:
    std::mt19937_64 g_;
};

template <std::size_t Dim>
paxray::Mask<Dim> random_mask(const paxray::Extent<Dim>& shape, double p, Rng& rng) {
    paxray::Mask<Dim> m(shape);
    for (auto& b : m.bits) b = rng.chance(p) ? 1 : 0;
    return m;
}

inline std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const fs::path& p, const std::string& s) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << s;
}

/// Runs a shell command; returns its exit status.
inline int run(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

inline std::string cli() { return PAXRAY_CLI; }

}  // namespace testing_support
