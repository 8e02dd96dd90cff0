#pragma once

#include <stdexcept>
#include <string>

namespace quadrant {

/// Base for all harness errors. `code()` is the stable machine-readable
/// identifier used in error ledgers and exit-code mapping; `what()` carries
/// the human-readable detail (file, line, item id where applicable).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define QUADRANT_ERROR_TYPE(Name)                                     \
    class Name : public Error {                                       \
    public:                                                           \
        explicit Name(const std::string& message)                     \
            : Error(#Name, message) {}                                \
    }

// corpus
QUADRANT_ERROR_TYPE(ParseError);
QUADRANT_ERROR_TYPE(ValidationError);
QUADRANT_ERROR_TYPE(UnknownCategory);
QUADRANT_ERROR_TYPE(TemplateError);

// gateway
QUADRANT_ERROR_TYPE(AuthError);
QUADRANT_ERROR_TYPE(TransportError);
QUADRANT_ERROR_TYPE(EmptyResponse);
QUADRANT_ERROR_TYPE(CacheConflict);
QUADRANT_ERROR_TYPE(CacheMiss);

// judge
QUADRANT_ERROR_TYPE(ScoreParseError);
QUADRANT_ERROR_TYPE(ScoreRangeError);
QUADRANT_ERROR_TYPE(InsufficientJudges);
QUADRANT_ERROR_TYPE(LabelParseError);
QUADRANT_ERROR_TYPE(EmptyInput);
QUADRANT_ERROR_TYPE(ScorerUnavailable);

// dimensions
QUADRANT_ERROR_TYPE(MissingAnswer);
QUADRANT_ERROR_TYPE(UnparsableChoice);
QUADRANT_ERROR_TYPE(InsufficientValidItems);
QUADRANT_ERROR_TYPE(ArgumentRequiresStance);
QUADRANT_ERROR_TYPE(SchemaError);
QUADRANT_ERROR_TYPE(EmptyAfterFiltering);
QUADRANT_ERROR_TYPE(UnknownModelId);

// analysis
QUADRANT_ERROR_TYPE(ConstantInput);
QUADRANT_ERROR_TYPE(LengthMismatch);
QUADRANT_ERROR_TYPE(TooFewPoints);
QUADRANT_ERROR_TYPE(RangeError);

// cli
QUADRANT_ERROR_TYPE(ManifestError);
QUADRANT_ERROR_TYPE(LockError);

#undef QUADRANT_ERROR_TYPE

}  // namespace quadrant
