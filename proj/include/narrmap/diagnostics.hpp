#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace narrmap {

// Bad or inconsistent user input: malformed files, unknown ids, bad parameters.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The extraction problem has no solution for the requested parameters.
// `family` names the constraint family found responsible ("coverage", "size",
// "connectivity", or a comma-separated combination).
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& family, const std::string& what)
      : std::runtime_error(what), family_(family) {}
  const std::string& family() const { return family_; }

 private:
  std::string family_;
};

// An internal invariant did not hold. Always a bug or a corrupted input map.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using WarningHandler = std::function<void(const std::string&)>;

// Emits a warning through the installed handler (stderr by default).
void warn(const std::string& message);

// Installs a handler and returns the previous one. Passing an empty function
// restores the default stderr handler.
WarningHandler set_warning_handler(WarningHandler handler);

// RAII capture of warnings, mostly for tests.
class ScopedWarningCapture {
 public:
  ScopedWarningCapture();
  ~ScopedWarningCapture();
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(const std::string& needle) const;

 private:
  std::vector<std::string> messages_;
  WarningHandler previous_;
};

}  // namespace narrmap
