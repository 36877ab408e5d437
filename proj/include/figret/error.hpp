#pragma once

#include <stdexcept>
#include <string>

namespace figret {

/// Base class for every error raised by the library. `kind()` gives a short
/// stable tag that the CLI prints and tests match on.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define FIGRET_DEFINE_ERROR(Name, tag)                                   \
    class Name : public Error {                                          \
    public:                                                              \
        explicit Name(const std::string& what) : Error(tag, what) {}     \
    }

FIGRET_DEFINE_ERROR(ConfigError, "config");
FIGRET_DEFINE_ERROR(ParseError, "parse");
FIGRET_DEFINE_ERROR(UnsupportedCorpusError, "unsupported-corpus");
FIGRET_DEFINE_ERROR(NumericError, "numeric");
FIGRET_DEFINE_ERROR(DimensionError, "dimension");
FIGRET_DEFINE_ERROR(StaleIndexError, "stale-index");
FIGRET_DEFINE_ERROR(DomainError, "domain");
FIGRET_DEFINE_ERROR(PreconditionError, "precondition");
FIGRET_DEFINE_ERROR(TeacherProtocolError, "teacher-protocol");
FIGRET_DEFINE_ERROR(TransportError, "transport");
FIGRET_DEFINE_ERROR(StageOrderError, "stage-order");
FIGRET_DEFINE_ERROR(IoError, "io");

#undef FIGRET_DEFINE_ERROR

}  // namespace figret
