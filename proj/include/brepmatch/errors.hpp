#pragma once

#include <stdexcept>
#include <string>

namespace brepmatch {

// Base of every error the library throws. The CLI maps the category to an
// exit code: validation-type errors exit 2, numeric failures exit 3.
class Error : public std::runtime_error {
public:
  enum class Category { Validation, Numeric, Usage };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

private:
  Category category_;
};

#define BREPMATCH_DEFINE_ERROR(Name, Cat)                                     \
  class Name : public Error {                                                 \
  public:                                                                     \
    explicit Name(const std::string& what)                                    \
        : Error(Error::Category::Cat, #Name ": " + what) {}                   \
  };

BREPMATCH_DEFINE_ERROR(ParseError, Validation)
BREPMATCH_DEFINE_ERROR(SchemaError, Validation)
BREPMATCH_DEFINE_ERROR(ValidationError, Validation)
BREPMATCH_DEFINE_ERROR(DegenerateFrame, Validation)
BREPMATCH_DEFINE_ERROR(InvalidTolerance, Validation)
BREPMATCH_DEFINE_ERROR(DuplicateId, Validation)
BREPMATCH_DEFINE_ERROR(FrameMismatch, Validation)
BREPMATCH_DEFINE_ERROR(InvalidCandidate, Validation)
BREPMATCH_DEFINE_ERROR(ModelMismatch, Validation)
BREPMATCH_DEFINE_ERROR(EmptyDataset, Validation)
BREPMATCH_DEFINE_ERROR(NoEligibleTarget, Validation)
BREPMATCH_DEFINE_ERROR(RejectedEdit, Validation)
BREPMATCH_DEFINE_ERROR(CheckpointError, Validation)
BREPMATCH_DEFINE_ERROR(ShapeError, Numeric)
BREPMATCH_DEFINE_ERROR(DomainError, Numeric)
BREPMATCH_DEFINE_ERROR(NonFiniteLoss, Numeric)

#undef BREPMATCH_DEFINE_ERROR

}  // namespace brepmatch
