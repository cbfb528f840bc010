#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "mammoth2/errors.hpp"
#include "mammoth2/numerics/real.hpp"

namespace m2::io {

// Fixed-width decimal rendering (printf %.9e) so metrics files are
// byte-stable across reruns.
std::string fmt_real(double v);

// Line-delimited key=value metrics log, one record per line, keys in the
// order given. Only deterministic quantities belong here; wall-clock
// throughput goes to stderr.
class MetricsWriter {
public:
    MetricsWriter() = default;
    explicit MetricsWriter(const std::string& path);

    void write(const std::vector<std::pair<std::string, std::string>>& fields);
    bool open() const { return os_.is_open(); }

private:
    std::ofstream os_;
};

}  // namespace m2::io
