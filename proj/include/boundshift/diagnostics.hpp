#pragma once

#include <mutex>
#include <string>
#include <vector>

namespace boundshift {

// Collects non-fatal warnings raised deep inside numerical routines so the CLI
// can surface them in the run manifest. Safe to share between worker threads.
class Diagnostics {
public:
    void warn(std::string message);
    void merge(const std::vector<std::string>& messages);
    std::vector<std::string> warnings() const;
    bool empty() const;

private:
    mutable std::mutex mutex_;
    std::vector<std::string> warnings_;
};

// Forwards to `diag` when non-null.
void warn(Diagnostics* diag, std::string message);

}  // namespace boundshift
