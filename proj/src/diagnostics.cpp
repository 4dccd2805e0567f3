#include "boundshift/diagnostics.hpp"

namespace boundshift {

void Diagnostics::warn(std::string message) {
    std::lock_guard lock(mutex_);
    warnings_.push_back(std::move(message));
}

void Diagnostics::merge(const std::vector<std::string>& messages) {
    std::lock_guard lock(mutex_);
    warnings_.insert(warnings_.end(), messages.begin(), messages.end());
}

std::vector<std::string> Diagnostics::warnings() const {
    std::lock_guard lock(mutex_);
    return warnings_;
}

bool Diagnostics::empty() const {
    std::lock_guard lock(mutex_);
    return warnings_.empty();
}

void warn(Diagnostics* diag, std::string message) {
    if (diag) diag->warn(std::move(message));
}

}  // namespace boundshift
