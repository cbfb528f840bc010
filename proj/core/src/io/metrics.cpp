#include "mammoth2/io/metrics.hpp"

#include <cstdio>

namespace m2::io {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9e", v);
    return buf;
}

MetricsWriter::MetricsWriter(const std::string& path) : os_(path, std::ios::trunc) {
    M2_CHECK(os_.is_open(), "cannot open metrics log for writing: " + path);
}

void MetricsWriter::write(const std::vector<std::pair<std::string, std::string>>& fields) {
    M2_CHECK(os_.is_open(), "metrics log is not open");
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) os_ << ' ';
        os_ << fields[i].first << '=' << fields[i].second;
    }
    os_ << '\n';
    os_.flush();
}

}  // namespace m2::io
