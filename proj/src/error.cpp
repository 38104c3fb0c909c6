#include "asbart/error.hpp"

#include <iostream>
#include <mutex>

namespace asbart {

namespace {
std::mutex g_warning_mutex;
WarningHandler g_warning_handler;
}  // namespace

void set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(g_warning_mutex);
  g_warning_handler = std::move(handler);
}

void warn(std::string_view message) {
  std::lock_guard lock(g_warning_mutex);
  if (g_warning_handler) {
    g_warning_handler(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

}  // namespace asbart
