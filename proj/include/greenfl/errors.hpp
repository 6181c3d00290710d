#ifndef GREENFL_ERRORS_HPP
#define GREENFL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace greenfl {

/// Bad or inconsistent configuration. `key` names the offending entry when known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg, std::string key = {})
        : std::runtime_error(msg), key_(std::move(key)) {}
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// The accuracy target cannot be met under the requested controls.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace greenfl

#endif
