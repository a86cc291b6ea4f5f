#pragma once

#include <stdexcept>
#include <string>

namespace vergsa {

// Base type for every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define VERGSA_DEFINE_ERROR(Name) \
    struct Name : Error {          \
        using Error::Error;        \
    }

// trace
VERGSA_DEFINE_ERROR(NoCodeBlock);
VERGSA_DEFINE_ERROR(UnknownTag);
VERGSA_DEFINE_ERROR(MultipleBlocks);
VERGSA_DEFINE_ERROR(OutOfRange);
VERGSA_DEFINE_ERROR(InvalidSpec);

// task_pool
VERGSA_DEFINE_ERROR(DimensionMismatch);
VERGSA_DEFINE_ERROR(ZeroNorm);
VERGSA_DEFINE_ERROR(EmptyPool);
VERGSA_DEFINE_ERROR(NotSuccessful);
VERGSA_DEFINE_ERROR(DuplicateTask);
VERGSA_DEFINE_ERROR(EncoderUnavailable);

// scripted_env
VERGSA_DEFINE_ERROR(WorldMismatch);
VERGSA_DEFINE_ERROR(InvalidWorld);

// rollout
VERGSA_DEFINE_ERROR(ModelUnavailable);
VERGSA_DEFINE_ERROR(ExhaustedRetries);
VERGSA_DEFINE_ERROR(UnexecutedNode);

// model_io
VERGSA_DEFINE_ERROR(AuthError);
VERGSA_DEFINE_ERROR(TimeoutError);

// verifier
VERGSA_DEFINE_ERROR(SchemaMismatch);
VERGSA_DEFINE_ERROR(SingleClass);
VERGSA_DEFINE_ERROR(NonFinite);
VERGSA_DEFINE_ERROR(DomainError);
VERGSA_DEFINE_ERROR(EmptyScores);
VERGSA_DEFINE_ERROR(EmptyCandidates);
VERGSA_DEFINE_ERROR(UnparseableReply);

// harness
VERGSA_DEFINE_ERROR(EmptyRecords);
VERGSA_DEFINE_ERROR(TooFewTasks);
VERGSA_DEFINE_ERROR(ConfigError);

#undef VERGSA_DEFINE_ERROR

}  // namespace vergsa
