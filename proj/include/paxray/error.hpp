#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace paxray {

/// Exception carrying a module-qualified error code such as "data.HeaderMismatch".
///
/// Every throwing operation in the library reports through this type so the
/// CLI can surface a machine-readable envelope without string parsing.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string code, std::string detail = {})
        : std::runtime_error(module + "." + code + (detail.empty() ? "" : ": " + detail)),
          module_(std::move(module)),
          code_(std::move(code)),
          detail_(std::move(detail)) {}

    [[nodiscard]] const std::string& module() const noexcept { return module_; }
    [[nodiscard]] const std::string& code() const noexcept { return code_; }
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

    /// "<module>.<code>"
    [[nodiscard]] std::string qualified() const { return module_ + "." + code_; }

private:
    std::string module_;
    std::string code_;
    std::string detail_;
};

/// Non-fatal diagnostic attached to results (e.g. an unexpected rib count).
struct Warning {
    std::string module;
    std::string code;
    std::string detail;

    [[nodiscard]] std::string qualified() const { return module + "." + code; }
    bool operator==(const Warning&) const = default;
};

}  // namespace paxray
