#pragma once

#include <stdexcept>
#include <string>

namespace plap
{

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

#define PLAP_DECLARE_ERROR(Name)                                               \
  class Name : public Error                                                    \
  {                                                                            \
  public:                                                                      \
    using Error::Error;                                                        \
  }

PLAP_DECLARE_ERROR(InvalidArgument);
PLAP_DECLARE_ERROR(DegenerateMesh);
PLAP_DECLARE_ERROR(NonConvergence);
PLAP_DECLARE_ERROR(NoSignChange);
PLAP_DECLARE_ERROR(NotSignChanging);
PLAP_DECLARE_ERROR(UnknownGuess);
PLAP_DECLARE_ERROR(TraceTooShort);
PLAP_DECLARE_ERROR(NonBracketed);
PLAP_DECLARE_ERROR(InternalError);
PLAP_DECLARE_ERROR(ParseError);
PLAP_DECLARE_ERROR(ValidationError);
PLAP_DECLARE_ERROR(MissingRow);

#undef PLAP_DECLARE_ERROR

} // namespace plap
