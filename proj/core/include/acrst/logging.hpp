#pragma once

#include <functional>
#include <string_view>

namespace acrst {

using LogSink = std::function<void(std::string_view)>;

/// Routes warnings; the default sink writes to stderr. Pass nullptr to mute.
void set_log_sink(LogSink sink);

void log_warning(std::string_view message);

}  // namespace acrst
