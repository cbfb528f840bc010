#pragma once

#include <string>

namespace m2::io {

// Single-writer guard on an output directory: creates <dir>/.lock
// exclusively, removes it on destruction. A held lock raises a validation
// error naming the lock path so the conflicting run is findable.
class DirLock {
public:
    explicit DirLock(const std::string& dir);
    ~DirLock();

    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::string path_;
};

}  // namespace m2::io
