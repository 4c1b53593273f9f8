#pragma once

#include <stdexcept>
#include <string>

namespace qfunc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define QFUNC_ERROR_TYPE(Name)                                        \
  class Name : public Error {                                         \
   public:                                                            \
    using Error::Error;                                               \
    const char* kind() const noexcept override { return #Name; }      \
  };

QFUNC_ERROR_TYPE(DomainError)
QFUNC_ERROR_TYPE(NonConvergence)
QFUNC_ERROR_TYPE(PoleError)
QFUNC_ERROR_TYPE(ParameterPole)
QFUNC_ERROR_TYPE(NegativeProduct)
QFUNC_ERROR_TYPE(LimitUnstable)

#undef QFUNC_ERROR_TYPE

}  // namespace qfunc
