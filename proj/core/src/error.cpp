#include "csahom/error.hpp"

#include <sstream>

namespace csahom {

std::string ParseError::format(const std::string& msg, const std::string& file, int line) {
  std::ostringstream os;
  os << file;
  if (line >= 0) os << ":" << line;
  os << ": " << msg;
  return os.str();
}

InversionError::InversionError(const std::string& where, int element, double det)
    : Error([&] {
        std::ostringstream os;
        os << where << ": element " << element << " inverted (det = " << det << ")";
        return os.str();
      }()),
      element_(element),
      det_(det) {}

ConvergenceError::ConvergenceError(const std::string& where, int iterations, double residual)
    : Error([&] {
        std::ostringstream os;
        os << where << ": no convergence after " << iterations
           << " iterations (residual = " << residual << ")";
        return os.str();
      }()),
      iterations_(iterations),
      residual_(residual) {}

}  // namespace csahom
