#ifndef FEX_ERROR_HPP
#define FEX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace fex {

class FexError : public std::runtime_error {
public:
  explicit FexError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fex

#endif  // FEX_ERROR_HPP
