#pragma once

#include <functional>
#include <string_view>

namespace sbandit {

using WarningHandler = std::function<void(std::string_view)>;

// Non-fatal diagnostics (Assumption-style bound violations and the like).
// The default handler writes to stderr.
void warn(std::string_view message);

// Installs a handler and returns the previous one. Passing an empty
// function silences warnings.
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace sbandit
