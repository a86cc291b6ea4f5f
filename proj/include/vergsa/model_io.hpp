#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "vergsa/task_pool.hpp"
#include "vergsa/trace.hpp"

namespace vergsa {

/// Assembled prompt: the task specification, exemplar decompositions, the
/// API list and the generation instructions, rendered in that order.
struct PromptBundle {
    std::string system;
    std::string user;
    std::vector<std::string> exemplars_used;
    std::vector<std::string> catalog_snapshot;
};

struct ModelEndpoint {
    std::string base_url;
    std::string model_name;
    double temperature = 0.0;
    int max_tokens = 2048;
    std::chrono::milliseconds timeout{30000};
    int retries = 2;
    std::string api_key_env = "VERGSA_API_KEY";
    // Base backoff between retry attempts; doubled per attempt.
    std::chrono::milliseconds backoff{100};
};

/// Handle for the policy model, completer or judge.
class Model {
  public:
    virtual ~Model() = default;
    virtual std::string generate(const PromptBundle& bundle) = 0;
    virtual std::string id() const = 0;
};

/// Versioned generation instructions (reply format, catalog discipline).
/// v1 template reconstructed for this artifact, not copied from any
/// deployed system.
std::string generation_instructions();
std::string completion_instructions();
/// The built-in exemplar used by the no-pool ablation.
std::string builtin_exemplar();

/// Deterministic rendering of the full generation prompt. An empty exemplar
/// list selects the fixed built-in exemplar template (exemplars_used =
/// ["builtin"]).
PromptBundle build_prompt(const TaskSpec& task, const std::vector<ScoredEntry>& exemplars,
                          const ApiCatalog& catalog, const std::string& instructions);

/// Prompt asking the completer to continue a partial solution after its
/// first `prefix_subtasks.size()` subtasks.
PromptBundle build_completion_prompt(const TaskSpec& task, const SceneConfiguration& scene,
                                     std::span<const Subtask> prefix_subtasks,
                                     const ApiCatalog& catalog, const std::string& instructions);

// ---------------------------------------------------------------------------
// Wire client (chat-completion JSON protocol)
// ---------------------------------------------------------------------------

struct HttpResponse {
    bool transport_ok = false;
    bool timed_out = false;
    int status = 0;
    std::string body;
    std::string error;
};

/// Injectable transport: (path, body, headers) -> response. The default
/// performs an HTTP POST against the endpoint's base_url.
using RequestFn = std::function<HttpResponse(
    const std::string& path, const std::string& body,
    const std::vector<std::pair<std::string, std::string>>& headers)>;

/// POSTs {model, messages:[{role,content}...], temperature, max_tokens} to
/// /v1/chat/completions and returns choices[0].message.content. Transient
/// failures (transport errors, timeouts, 429/5xx) are retried with
/// exponential backoff; 401/403 raise AuthError immediately. After the retry
/// budget: TimeoutError when the last failure was a timeout, else
/// ModelUnavailable. The message content is the bundle text byte-for-byte.
std::string chat_generate(const ModelEndpoint& endpoint, const PromptBundle& bundle,
                          const RequestFn& request = {});

class HttpChatClient final : public Model {
  public:
    explicit HttpChatClient(ModelEndpoint endpoint, RequestFn request = {});
    std::string generate(const PromptBundle& bundle) override;
    std::string id() const override;

  private:
    ModelEndpoint endpoint_;
    RequestFn request_;
};

// ---------------------------------------------------------------------------
// Mock model
// ---------------------------------------------------------------------------

using FixtureBank = std::map<std::string, std::vector<std::string>>;

/// Deterministic offline model driven by a fixture bank keyed by prompt
/// hash (hex FNV-1a64 of system + "\n" + user). Replies for a hash are
/// returned in order, cycling once exhausted; unknown prompts return a fixed
/// fallback reply that parses as a single-subtask solution.
class MockModel final : public Model {
  public:
    explicit MockModel(FixtureBank bank, std::uint64_t seed = 0);
    std::string generate(const PromptBundle& bundle) override;
    std::string id() const override;

    static std::string prompt_hash(const PromptBundle& bundle);
    static std::string fallback_reply();

  private:
    FixtureBank bank_;
    std::uint64_t seed_;
    std::mutex mu_;
    std::map<std::string, std::size_t> cursor_;
};

std::unique_ptr<Model> mock_model(FixtureBank bank, std::uint64_t seed = 0);

FixtureBank load_fixture_bank(const std::string& path);
void save_fixture_bank(const FixtureBank& bank, const std::string& path);

// ---------------------------------------------------------------------------
// Remote encoder (pluggable counterpart of the offline fallback embedder)
// ---------------------------------------------------------------------------

/// POSTs {model, input:[text]} to /v1/embeddings; raises EncoderUnavailable
/// on any failure.
class RemoteEmbedder final : public Embedder {
  public:
    RemoteEmbedder(ModelEndpoint endpoint, std::size_t dimension, RequestFn request = {});
    EmbeddingVector embed_text(std::string_view text) const override;
    std::string id() const override;
    std::size_t dimension() const override { return dimension_; }

  private:
    ModelEndpoint endpoint_;
    std::size_t dimension_;
    RequestFn request_;
};

}  // namespace vergsa
