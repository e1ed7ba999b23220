#include "ssn/types.hpp"

#include <sstream>

namespace ssn {

FormatError::FormatError(const std::string& file, const std::string& where, std::size_t line, const std::string& what)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << file;
          if (line > 0) os << ":" << line;
          if (!where.empty()) os << " (" << where << ")";
          os << ": " << what;
          return os.str();
      }()),
      file_(file), where_(where), line_(line) {}

} // namespace ssn
