#include "vergsa/model_io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace vergsa {

std::string generation_instructions() {
    return
        "Generation instructions (template v1, reconstructed):\n"
        "1. First output a scene section:\n"
        "   scene:\n"
        "   - name: <ObjectName>, asset: <asset id>, scale: <float>, position: [x, y, z]\n"
        "   embodiment: <robot>\n"
        "2. Then decompose the task into subtasks. For each subtask output a header line\n"
        "   'subtask N: <short imperative name>' followed by exactly one fenced code block.\n"
        "3. Tag the fence 'primitive' for motion-planning execution code. Primitive code\n"
        "   must assign 'rgbs, final_state = <primitive API call>' and a boolean 'success'.\n"
        "4. Tag the fence 'reward' for reinforcement-learning reward code. Reward code must\n"
        "   assign named 'reward_*' components, combine every component into 'reward', and\n"
        "   assign a boolean 'success' condition derived from simulator state queries.\n"
        "5. Call only the listed APIs plus standard math; name objects, links and joints\n"
        "   exactly as given in the task specification.\n";
}

std::string completion_instructions() {
    return
        "Completion instructions (template v1, reconstructed):\n"
        "The partial solution above is fixed. Continue it from the next subtask, using the\n"
        "same format: 'subtask N: <name>' headers, one fenced block per subtask, tagged\n"
        "'primitive' or 'reward'. If the task is already complete, reply\n"
        "'No further subtasks.' without any code block.\n";
}

std::string builtin_exemplar() {
    return
        "## Example (builtin): Open Box Lid\n"
        "description: The robot arm lifts the hinged lid of a box to an open position\n"
        "solution:\n"
        "subtask 1: grasp the lid\n"
        "```primitive\n"
        "rgbs, final_state = grasp_object_link(self, \"Box\", \"link_0\")\n"
        "success = check_grasped(self, \"Box\", \"link_0\")\n"
        "```\n"
        "subtask 2: rotate the lid to the open position\n"
        "```reward\n"
        "def _compute_reward(self):\n"
        "    eef_pos = get_eef_pos(self)[0]\n"
        "    lid_pos = get_link_state(self, \"Box\", \"link_0\")\n"
        "    reward_near = -np.linalg.norm(eef_pos - lid_pos)\n"
        "    joint_angle = get_joint_state(self, \"Box\", \"joint_0\")\n"
        "    open_angle = get_joint_limit(self, \"Box\", \"joint_0\")[1]\n"
        "    diff = np.abs(joint_angle - open_angle)\n"
        "    reward_joint = -diff\n"
        "    reward = reward_near + 5 * reward_joint\n"
        "    success = diff < 0.1 * np.abs(open_angle)\n"
        "    return reward, success\n"
        "```\n";
}

namespace {

std::string render_task_section(const TaskSpec& task) {
    std::ostringstream out;
    out << "# Task specification\n";
    out << "name: " << task.name << "\n";
    out << "description: " << task.description << "\n";
    if (!task.articulation_tree.links.empty() || !task.articulation_tree.joints.empty()) {
        out << "articulation tree:\n";
        for (const auto& l : task.articulation_tree.links) out << "  link " << l << "\n";
        for (const auto& j : task.articulation_tree.joints)
            out << "  joint " << j.name << " type " << j.type << " parent " << j.parent_link
                << " child " << j.child_link << "\n";
    }
    if (!task.link_semantics.empty()) {
        out << "link semantics:\n";
        for (const auto& [link, label] : task.link_semantics) out << "  " << link << ": " << label << "\n";
    }
    if (!task.relevant_links.empty()) {
        out << "relevant links:";
        for (const auto& l : task.relevant_links) out << " " << l;
        out << "\n";
    }
    if (!task.relevant_joints.empty()) {
        out << "relevant joints:";
        for (const auto& j : task.relevant_joints) out << " " << j;
        out << "\n";
    }
    if (!task.initial_config.empty()) out << "initial config: " << task.initial_config << "\n";
    return out.str();
}

std::string render_api_section(const ApiCatalog& catalog, std::vector<std::string>* snapshot) {
    std::ostringstream out;
    out << "# Available APIs\n";
    auto list = [&](const char* title, const std::set<std::string>& apis) {
        if (apis.empty()) return;
        out << title << ":";
        for (const auto& a : apis) {
            out << " " << a;
            if (snapshot) snapshot->push_back(a);
        }
        out << "\n";
    };
    list("primitive", catalog.primitive_apis);
    list("reward", catalog.reward_apis);
    list("shared", catalog.shared);
    return out.str();
}

const char* kSystemPrompt =
    "You plan robotic manipulation skills. Given a task specification you produce a scene "
    "configuration and a sequence of subtask supervisions in the exact format requested.";

}  // namespace

PromptBundle build_prompt(const TaskSpec& task, const std::vector<ScoredEntry>& exemplars,
                          const ApiCatalog& catalog, const std::string& instructions) {
    PromptBundle bundle;
    bundle.system = kSystemPrompt;

    std::ostringstream user;
    user << render_task_section(task) << "\n";

    user << "# Reference examples\n";
    if (exemplars.empty()) {
        user << builtin_exemplar() << "\n";
        bundle.exemplars_used.push_back("builtin");
    } else {
        for (std::size_t i = 0; i < exemplars.size(); ++i) {
            const PoolEntry& e = exemplars[i].entry;
            user << "## Example " << (i + 1) << ": " << e.task.name << "\n";
            user << "description: " << e.task.description << "\n";
            user << "solution:\n";
            for (std::size_t s = 0; s < e.solution.subtasks.size(); ++s)
                user << render_subtask(e.solution.subtasks[s], s + 1);
            user << "\n";
            bundle.exemplars_used.push_back(e.task.name);
        }
    }

    user << render_api_section(catalog, &bundle.catalog_snapshot) << "\n";
    user << "# Instructions\n" << instructions;
    bundle.user = user.str();
    return bundle;
}

PromptBundle build_completion_prompt(const TaskSpec& task, const SceneConfiguration& scene,
                                     std::span<const Subtask> prefix_subtasks,
                                     const ApiCatalog& catalog, const std::string& instructions) {
    PromptBundle bundle;
    bundle.system = kSystemPrompt;

    std::ostringstream user;
    user << render_task_section(task) << "\n";
    user << "# Partial solution\n";
    if (!scene.raw_text.empty()) user << scene.raw_text << "\n";
    for (std::size_t i = 0; i < prefix_subtasks.size(); ++i)
        user << render_subtask(prefix_subtasks[i], i + 1);
    user << "\n";
    user << render_api_section(catalog, &bundle.catalog_snapshot) << "\n";
    user << "# Instructions\n" << instructions;
    bundle.user = user.str();
    return bundle;
}

// ---------------------------------------------------------------------------
// Wire client
// ---------------------------------------------------------------------------

namespace {

RequestFn default_transport(const ModelEndpoint& endpoint) {
    std::string base = endpoint.base_url;
    auto timeout = endpoint.timeout;
    return [base, timeout](const std::string& path, const std::string& body,
                           const std::vector<std::pair<std::string, std::string>>& headers) {
        HttpResponse out;
        httplib::Client client(base);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
        httplib::Headers hl;
        for (const auto& [k, v] : headers) hl.emplace(k, v);
        auto res = client.Post(path, hl, body, "application/json");
        if (!res) {
            out.error = httplib::to_string(res.error());
            out.timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                            res.error() == httplib::Error::Read || res.error() == httplib::Error::Write;
            return out;
        }
        out.transport_ok = true;
        out.status = res->status;
        out.body = res->body;
        return out;
    };
}

std::vector<std::pair<std::string, std::string>> auth_headers(const ModelEndpoint& endpoint) {
    std::vector<std::pair<std::string, std::string>> headers;
    if (!endpoint.api_key_env.empty()) {
        if (const char* key = std::getenv(endpoint.api_key_env.c_str()))
            headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
    return headers;
}

HttpResponse post_with_retries(const ModelEndpoint& endpoint, const RequestFn& request,
                               const std::string& path, const std::string& body) {
    RequestFn fn = request ? request : default_transport(endpoint);
    auto headers = auth_headers(endpoint);

    HttpResponse last;
    for (int attempt = 0; attempt <= endpoint.retries; ++attempt) {
        if (attempt > 0 && endpoint.backoff.count() > 0)
            std::this_thread::sleep_for(endpoint.backoff * (1 << (attempt - 1)));
        last = fn(path, body, headers);
        if (last.transport_ok) {
            if (last.status == 401 || last.status == 403)
                throw AuthError("endpoint rejected credentials (status " +
                                std::to_string(last.status) + ")");
            if (last.status >= 200 && last.status < 300) return last;
            bool transient = last.status == 429 || last.status >= 500;
            if (!transient)
                throw ModelUnavailable("endpoint returned status " + std::to_string(last.status));
        }
    }
    if (last.timed_out) throw TimeoutError("request timed out after retries: " + last.error);
    throw ModelUnavailable("endpoint unreachable after " + std::to_string(endpoint.retries + 1) +
                           " attempts: " + (last.error.empty() ? "status " + std::to_string(last.status)
                                                               : last.error));
}

}  // namespace

std::string chat_generate(const ModelEndpoint& endpoint, const PromptBundle& bundle,
                          const RequestFn& request) {
    nlohmann::json body = {
        {"model", endpoint.model_name},
        {"messages",
         {{{"role", "system"}, {"content", bundle.system}},
          {{"role", "user"}, {"content", bundle.user}}}},
        {"temperature", endpoint.temperature},
        {"max_tokens", endpoint.max_tokens},
    };
    HttpResponse res = post_with_retries(endpoint, request, "/v1/chat/completions", body.dump());
    try {
        nlohmann::json j = nlohmann::json::parse(res.body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ModelUnavailable(std::string("malformed completion response: ") + e.what());
    }
}

HttpChatClient::HttpChatClient(ModelEndpoint endpoint, RequestFn request)
    : endpoint_(std::move(endpoint)), request_(std::move(request)) {}

std::string HttpChatClient::generate(const PromptBundle& bundle) {
    return chat_generate(endpoint_, bundle, request_);
}

std::string HttpChatClient::id() const { return "http:" + endpoint_.model_name; }

// ---------------------------------------------------------------------------
// Mock model
// ---------------------------------------------------------------------------

MockModel::MockModel(FixtureBank bank, std::uint64_t seed) : bank_(std::move(bank)), seed_(seed) {}

std::string MockModel::prompt_hash(const PromptBundle& bundle) {
    return code_text::fnv1a64_hex(bundle.system + "\n" + bundle.user);
}

std::string MockModel::fallback_reply() {
    return
        "scene:\n"
        "- name: FallbackObject, asset: none, scale: 1.0, position: [0.0, 0.0, 0.0]\n"
        "embodiment: franka panda\n"
        "\n"
        "subtask 1: placeholder action\n"
        "```primitive\n"
        "rgbs, final_state = grasp_object(self, \"FallbackObject\")\n"
        "success = check_grasped(self, \"FallbackObject\")\n"
        "```\n";
}

std::string MockModel::generate(const PromptBundle& bundle) {
    std::string hash = prompt_hash(bundle);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = bank_.find(hash);
    if (it == bank_.end() || it->second.empty()) return fallback_reply();
    std::size_t& cur = cursor_[hash];
    const std::string& reply = it->second[cur % it->second.size()];
    ++cur;
    return reply;
}

std::string MockModel::id() const { return "mock:" + std::to_string(seed_); }

std::unique_ptr<Model> mock_model(FixtureBank bank, std::uint64_t seed) {
    return std::make_unique<MockModel>(std::move(bank), seed);
}

FixtureBank load_fixture_bank(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open fixture bank: " + path);
    nlohmann::json j;
    in >> j;
    return j.get<FixtureBank>();
}

void save_fixture_bank(const FixtureBank& bank, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write fixture bank: " + path);
    out << nlohmann::json(bank).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Remote encoder
// ---------------------------------------------------------------------------

RemoteEmbedder::RemoteEmbedder(ModelEndpoint endpoint, std::size_t dimension, RequestFn request)
    : endpoint_(std::move(endpoint)), dimension_(dimension), request_(std::move(request)) {}

EmbeddingVector RemoteEmbedder::embed_text(std::string_view text) const {
    nlohmann::json body = {{"model", endpoint_.model_name}, {"input", {std::string(text)}}};
    HttpResponse res;
    try {
        res = post_with_retries(endpoint_, request_, "/v1/embeddings", body.dump());
    } catch (const Error& e) {
        throw EncoderUnavailable(std::string("encoder endpoint failed: ") + e.what());
    }
    try {
        nlohmann::json j = nlohmann::json::parse(res.body);
        EmbeddingVector e;
        e.values = j.at("data").at(0).at("embedding").get<std::vector<double>>();
        if (dimension_ != 0 && e.values.size() != dimension_)
            throw EncoderUnavailable("encoder returned dimension " + std::to_string(e.values.size()) +
                                     ", expected " + std::to_string(dimension_));
        return e;
    } catch (const nlohmann::json::exception& e) {
        throw EncoderUnavailable(std::string("malformed embedding response: ") + e.what());
    }
}

std::string RemoteEmbedder::id() const { return "remote:" + endpoint_.model_name; }

}  // namespace vergsa
