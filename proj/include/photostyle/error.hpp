#pragma once

#include <stdexcept>
#include <string>

namespace photostyle {

// All library failures derive from Error so callers (the CLI in particular)
// can separate operational errors from programming mistakes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PHOTOSTYLE_DEFINE_ERROR(Name)    \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

PHOTOSTYLE_DEFINE_ERROR(DecodeError);
PHOTOSTYLE_DEFINE_ERROR(UnsupportedFormatError);
PHOTOSTYLE_DEFINE_ERROR(BoundsError);
PHOTOSTYLE_DEFINE_ERROR(ChannelError);
PHOTOSTYLE_DEFINE_ERROR(ParseError);
PHOTOSTYLE_DEFINE_ERROR(ValidationError);
PHOTOSTYLE_DEFINE_ERROR(ShapeError);
PHOTOSTYLE_DEFINE_ERROR(LabelError);
PHOTOSTYLE_DEFINE_ERROR(TrainingDivergedError);
PHOTOSTYLE_DEFINE_ERROR(LoadError);
PHOTOSTYLE_DEFINE_ERROR(SplitError);
PHOTOSTYLE_DEFINE_ERROR(ReferenceError);
PHOTOSTYLE_DEFINE_ERROR(PreconditionError);
PHOTOSTYLE_DEFINE_ERROR(EvaluationError);
PHOTOSTYLE_DEFINE_ERROR(DuplicationError);
PHOTOSTYLE_DEFINE_ERROR(SchemaError);
PHOTOSTYLE_DEFINE_ERROR(JoinError);
PHOTOSTYLE_DEFINE_ERROR(CollinearityError);
PHOTOSTYLE_DEFINE_ERROR(IdentificationError);
PHOTOSTYLE_DEFINE_ERROR(InsufficientDataError);
PHOTOSTYLE_DEFINE_ERROR(PlotError);
PHOTOSTYLE_DEFINE_ERROR(IoError);
PHOTOSTYLE_DEFINE_ERROR(MissingArtifactError);
PHOTOSTYLE_DEFINE_ERROR(UsageError);

#undef PHOTOSTYLE_DEFINE_ERROR

}  // namespace photostyle
