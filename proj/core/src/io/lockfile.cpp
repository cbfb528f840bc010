#include "mammoth2/io/lockfile.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>

#include "mammoth2/errors.hpp"

namespace m2::io {

DirLock::DirLock(const std::string& dir) {
    std::filesystem::create_directories(dir);
    path_ = dir + "/.lock";
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    M2_CHECK(fd >= 0, "output directory is locked by another run (remove " + path_ +
                          " if that run is dead)");
    char pid[32];
    int n = std::snprintf(pid, sizeof(pid), "%ld\n", static_cast<long>(::getpid()));
    if (n > 0) {
        ssize_t written = ::write(fd, pid, static_cast<size_t>(n));
        (void)written;  // advisory content only; the lock is the file itself
    }
    ::close(fd);
}

DirLock::~DirLock() { ::unlink(path_.c_str()); }

}  // namespace m2::io
