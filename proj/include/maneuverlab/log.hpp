#pragma once

#include <functional>
#include <string>

namespace mlab {

using WarningHandler = std::function<void(const std::string&)>;

/// Routes a non-fatal diagnostic. The default handler writes to stderr.
void warn(const std::string& message);

/// Replaces the handler; pass nullptr to restore the default. Returns the previous one.
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace mlab
