#pragma once

#include <stdexcept>
#include <string>

namespace hypobench {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kData = 3,
    kNumeric = 4,
};

/// Root of every error raised by the library. Each subclass carries the exit
/// code the CLI should terminate with when it escapes a subcommand.
class Error : public std::runtime_error {
   public:
    explicit Error(const std::string& what, ExitCode code = ExitCode::kData)
        : std::runtime_error(what), code_(code) {}

    ExitCode exit_code() const noexcept { return code_; }

   private:
    ExitCode code_;
};

#define HYPOBENCH_DEFINE_ERROR(Name, Code)                                      \
    class Name : public Error {                                                 \
       public:                                                                  \
        explicit Name(const std::string& what) : Error(what, ExitCode::Code) {} \
    }

HYPOBENCH_DEFINE_ERROR(UsageError, kUsage);
HYPOBENCH_DEFINE_ERROR(ConfigError, kUsage);
HYPOBENCH_DEFINE_ERROR(SchemaError, kData);
HYPOBENCH_DEFINE_ERROR(IntegrityError, kData);
HYPOBENCH_DEFINE_ERROR(ParseError, kData);
HYPOBENCH_DEFINE_ERROR(IoError, kData);
HYPOBENCH_DEFINE_ERROR(DomainError, kData);
HYPOBENCH_DEFINE_ERROR(SplitError, kData);
HYPOBENCH_DEFINE_ERROR(ResampleError, kData);
HYPOBENCH_DEFINE_ERROR(WeightingError, kData);
HYPOBENCH_DEFINE_ERROR(TrainingError, kData);
HYPOBENCH_DEFINE_ERROR(MetricError, kData);
HYPOBENCH_DEFINE_ERROR(ContractError, kData);
HYPOBENCH_DEFINE_ERROR(ShapeError, kData);
HYPOBENCH_DEFINE_ERROR(NumericError, kNumeric);

#undef HYPOBENCH_DEFINE_ERROR

}  // namespace hypobench
