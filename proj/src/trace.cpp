#include "vergsa/trace.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace vergsa {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    lines.push_back(cur);
    return lines;
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// "subtask 3: lower the seat" -> name part, or nullopt.
std::optional<std::string> subtask_header_name(const std::string& line) {
    std::string t = trim(line);
    std::string lower = to_lower(t);
    if (lower.rfind("subtask", 0) != 0) return std::nullopt;
    std::size_t i = 7;
    while (i < t.size() && std::isspace(static_cast<unsigned char>(t[i]))) ++i;
    std::size_t digits = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) {
        ++i;
        ++digits;
    }
    if (digits == 0) return std::nullopt;
    while (i < t.size() && std::isspace(static_cast<unsigned char>(t[i]))) ++i;
    if (i >= t.size() || t[i] != ':') return std::nullopt;
    return trim(t.substr(i + 1));
}

bool is_opening_fence(const std::string& line, std::string* tag) {
    std::string t = trim(line);
    if (t.rfind("```", 0) != 0) return false;
    if (tag) *tag = trim(t.substr(3));
    return true;
}

bool is_closing_fence(const std::string& line) { return trim(line) == "```"; }

struct FencedBlock {
    std::string tag;
    std::string code;
    std::size_t open_line = 0;  // index of the opening fence
};

// All complete fenced blocks in `raw`. An unterminated fence yields none
// past the point where it opens.
std::vector<FencedBlock> find_blocks(const std::vector<std::string>& lines) {
    std::vector<FencedBlock> blocks;
    std::size_t i = 0;
    while (i < lines.size()) {
        std::string tag;
        if (!is_opening_fence(lines[i], &tag)) {
            ++i;
            continue;
        }
        std::size_t open = i++;
        std::vector<std::string> body;
        bool closed = false;
        while (i < lines.size()) {
            if (is_closing_fence(lines[i])) {
                closed = true;
                ++i;
                break;
            }
            body.push_back(lines[i]);
            ++i;
        }
        if (!closed) break;
        std::string code;
        for (std::size_t k = 0; k < body.size(); ++k) {
            if (k) code.push_back('\n');
            code += body[k];
        }
        blocks.push_back({tag, code, open});
    }
    return blocks;
}

Supervision supervision_from_block(const FencedBlock& block) {
    std::string tag = to_lower(trim(block.tag));
    Supervision s;
    if (tag == "primitive") {
        s.variant = SupervisionVariant::Primitive;
    } else if (tag == "reward") {
        s.variant = SupervisionVariant::RewardFunction;
    } else {
        throw UnknownTag("unknown fence tag: '" + block.tag + "' (expected primitive or reward)");
    }
    s.code = block.code;
    s.api_calls = code_text::called_identifiers(s.code);
    return s;
}

// Last nonempty, non-fence prose line before `line`, stripped of a trailing ':'.
std::string prose_name_before(const std::vector<std::string>& lines, std::size_t line) {
    for (std::size_t i = line; i-- > 0;) {
        std::string t = trim(lines[i]);
        if (t.empty() || t.rfind("```", 0) == 0) continue;
        if (auto name = subtask_header_name(lines[i])) return *name;
        if (!t.empty() && t.back() == ':') t.pop_back();
        return trim(t);
    }
    return {};
}

// Parses "- name: X, asset: Y, scale: Z, position: [a, b, c]" leniently.
std::optional<SceneObject> parse_scene_object(const std::string& line) {
    std::string t = trim(line);
    if (t.rfind("- ", 0) != 0) return std::nullopt;
    t = t.substr(2);
    SceneObject obj;
    bool saw_name = false;
    std::size_t i = 0;
    while (i < t.size()) {
        std::size_t colon = t.find(':', i);
        if (colon == std::string::npos) break;
        std::string key = to_lower(trim(t.substr(i, colon - i)));
        std::size_t j = colon + 1;
        std::string value;
        if (key == "position") {
            std::size_t open = t.find('[', j);
            std::size_t close = open == std::string::npos ? std::string::npos : t.find(']', open);
            if (open == std::string::npos || close == std::string::npos) break;
            value = t.substr(open + 1, close - open - 1);
            j = close + 1;
            std::size_t comma = t.find(',', j);
            i = comma == std::string::npos ? t.size() : comma + 1;
        } else {
            std::size_t comma = t.find(',', j);
            value = trim(t.substr(j, (comma == std::string::npos ? t.size() : comma) - j));
            i = comma == std::string::npos ? t.size() : comma + 1;
        }
        if (key == "name") {
            obj.name = value;
            saw_name = true;
        } else if (key == "asset") {
            obj.asset_id = value;
        } else if (key == "scale") {
            try {
                obj.scale = std::stod(value);
            } catch (...) {
            }
        } else if (key == "position") {
            std::stringstream ss(value);
            std::string part;
            std::size_t axis = 0;
            while (std::getline(ss, part, ',') && axis < 3) {
                try {
                    obj.position[axis] = std::stod(trim(part));
                } catch (...) {
                }
                ++axis;
            }
        }
    }
    if (!saw_name) return std::nullopt;
    return obj;
}

SceneConfiguration parse_scene_section(const std::vector<std::string>& lines, std::size_t begin,
                                       std::size_t end) {
    SceneConfiguration scene;
    std::string raw;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) raw.push_back('\n');
        raw += lines[i];
        std::string t = trim(lines[i]);
        std::string lower = to_lower(t);
        if (lower.rfind("embodiment:", 0) == 0) {
            scene.embodiment = trim(t.substr(std::string("embodiment:").size()));
        } else if (auto obj = parse_scene_object(lines[i])) {
            scene.objects.push_back(*obj);
        }
    }
    scene.raw_text = trim(raw);
    scene.validate();
    return scene;
}

}  // namespace

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

bool ArticulationTree::has_link(std::string_view name) const {
    return std::find(links.begin(), links.end(), name) != links.end();
}

bool ArticulationTree::has_joint(std::string_view name) const {
    return std::any_of(joints.begin(), joints.end(), [&](const Joint& j) { return j.name == name; });
}

void TaskSpec::validate() const {
    if (name.empty()) throw InvalidSpec("task name must be nonempty");
    for (const auto& l : relevant_links) {
        if (!articulation_tree.has_link(l))
            throw InvalidSpec("relevant link '" + l + "' missing from articulation tree");
    }
    for (const auto& j : relevant_joints) {
        if (!articulation_tree.has_joint(j))
            throw InvalidSpec("relevant joint '" + j + "' missing from articulation tree");
    }
    for (const auto& j : articulation_tree.joints) {
        if (!articulation_tree.has_link(j.parent_link) || !articulation_tree.has_link(j.child_link))
            throw InvalidSpec("joint '" + j.name + "' references a link not in the tree");
    }
}

void SceneConfiguration::validate() const {
    std::set<std::string> seen;
    for (const auto& obj : objects) {
        if (!seen.insert(obj.name).second)
            throw InvalidSpec("duplicate scene object name: " + obj.name);
    }
}

std::string to_string(SupervisionVariant v) {
    return v == SupervisionVariant::Primitive ? "primitive" : "reward";
}

SupervisionVariant variant_from_string(std::string_view s) {
    if (s == "primitive") return SupervisionVariant::Primitive;
    if (s == "reward") return SupervisionVariant::RewardFunction;
    throw UnknownTag("unknown supervision variant: " + std::string(s));
}

void ApiCatalog::validate() const {
    auto overlap = [](const std::set<std::string>& a, const std::set<std::string>& b) {
        return std::any_of(a.begin(), a.end(), [&](const std::string& x) { return b.count(x) > 0; });
    };
    if (overlap(primitive_apis, reward_apis) || overlap(primitive_apis, shared) ||
        overlap(reward_apis, shared))
        throw InvalidSpec("catalog sets must be pairwise disjoint");
}

ApiCatalog default_catalog() {
    ApiCatalog c;
    c.primitive_apis = {"grasp_object", "grasp_object_link", "release_grasp", "check_grasped"};
    c.reward_apis = {"get_eef_pos",      "get_position",         "get_link_state",
                     "get_joint_state",  "get_joint_limit",      "get_bounding_box",
                     "get_bounding_box_link", "in_bbox"};
    return c;
}

std::set<std::string> default_stop_list() {
    return {
        "abs",   "min",   "max",   "sum",    "len",   "range", "float", "int",
        "str",   "bool",  "print", "norm",   "sqrt",  "exp",   "log",   "pow",
        "clip",  "dot",   "array", "zeros",  "ones",  "mean",  "std",   "round",
        "sin",   "cos",   "tan",   "arctan2", "sign", "enumerate", "zip", "sorted",
        "list",  "dict",  "set",   "tuple",  "isinstance",
    };
}

std::set<std::string> load_stop_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open stop-list file: " + path);
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        out.insert(t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

Supervision parse_supervision(const std::string& raw) {
    auto lines = split_lines(raw);
    auto blocks = find_blocks(lines);
    if (blocks.empty()) throw NoCodeBlock("no fenced code block found");
    if (blocks.size() > 1)
        throw MultipleBlocks("expected one fenced block, found " + std::to_string(blocks.size()));
    return supervision_from_block(blocks.front());
}

Subtask parse_subtask(const std::string& raw, std::optional<std::string> name) {
    auto lines = split_lines(raw);
    auto blocks = find_blocks(lines);
    if (blocks.empty()) throw NoCodeBlock("no fenced code block found");
    if (blocks.size() > 1)
        throw MultipleBlocks("expected one fenced block, found " + std::to_string(blocks.size()));
    Subtask sub;
    sub.supervision = supervision_from_block(blocks.front());
    sub.name = name ? *name : prose_name_before(lines, blocks.front().open_line);
    if (sub.name.empty()) sub.name = "subtask";
    return sub;
}

namespace {

struct Chunk {
    std::string name;
    FencedBlock block;
};

// Splits reply text into (scene section, one chunk per fenced block).
std::pair<SceneConfiguration, std::vector<Chunk>> chunk_reply(const std::string& raw) {
    auto lines = split_lines(raw);
    auto blocks = find_blocks(lines);

    // The scene section ends at the first subtask header, or failing that at
    // the prose line naming the first block.
    std::size_t scene_end = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (subtask_header_name(lines[i])) {
            scene_end = i;
            break;
        }
    }
    if (scene_end == lines.size() && !blocks.empty()) {
        std::size_t open = blocks.front().open_line;
        scene_end = open;
        for (std::size_t i = open; i-- > 0;) {
            if (!trim(lines[i]).empty()) {
                scene_end = i;
                break;
            }
        }
    }
    if (blocks.empty() && scene_end == lines.size()) scene_end = lines.size();

    SceneConfiguration scene = parse_scene_section(lines, 0, scene_end);

    std::vector<Chunk> chunks;
    for (const auto& b : blocks) {
        Chunk c;
        c.block = b;
        c.name = prose_name_before(lines, b.open_line);
        if (c.name.empty()) c.name = "subtask " + std::to_string(chunks.size() + 1);
        chunks.push_back(std::move(c));
    }
    return {std::move(scene), std::move(chunks)};
}

}  // namespace

Solution parse_solution(const std::string& raw) {
    auto [scene, chunks] = chunk_reply(raw);
    if (chunks.empty()) throw NoCodeBlock("reply contains no fenced code block");
    Solution sol;
    sol.scene = std::move(scene);
    for (const auto& c : chunks) {
        Subtask sub;
        sub.name = c.name;
        sub.supervision = supervision_from_block(c.block);
        sol.subtasks.push_back(std::move(sub));
    }
    return sol;
}

std::vector<Subtask> parse_continuation(const std::string& raw) {
    auto [scene, chunks] = chunk_reply(raw);
    (void)scene;
    std::vector<Subtask> out;
    for (const auto& c : chunks) {
        Subtask sub;
        sub.name = c.name;
        sub.supervision = supervision_from_block(c.block);
        out.push_back(std::move(sub));
    }
    return out;
}

std::string render_supervision(const Supervision& s) {
    std::string out = "```" + to_string(s.variant) + "\n";
    out += s.code;
    if (!s.code.empty() && s.code.back() != '\n') out.push_back('\n');
    out += "```\n";
    return out;
}

std::string render_subtask(const Subtask& sub, std::size_t index_1based) {
    return "subtask " + std::to_string(index_1based) + ": " + sub.name + "\n" +
           render_supervision(sub.supervision);
}

std::string render_solution(const Solution& sol) {
    std::string out;
    if (!sol.scene.raw_text.empty()) {
        out += sol.scene.raw_text;
        out += "\n\n";
    }
    for (std::size_t i = 0; i < sol.subtasks.size(); ++i) {
        out += render_subtask(sol.subtasks[i], i + 1);
        out.push_back('\n');
    }
    return out;
}

ApiValidationReport validate_apis(const Supervision& s, const ApiCatalog& catalog,
                                  const std::set<std::string>& stop_list) {
    const std::set<std::string>& own = s.variant == SupervisionVariant::Primitive
                                           ? catalog.primitive_apis
                                           : catalog.reward_apis;
    ApiValidationReport report;
    for (const auto& id : s.api_calls) {
        if (stop_list.count(id)) continue;
        if (own.count(id) || catalog.shared.count(id)) continue;
        report.offending.push_back(id);
    }
    report.ok = report.offending.empty();
    return report;
}

TracePrefix prefix(const Solution& sol, std::size_t m) {
    if (m < 1 || m > sol.subtasks.size())
        throw OutOfRange("prefix length " + std::to_string(m) + " out of range [1, " +
                         std::to_string(sol.subtasks.size()) + "]");
    TracePrefix p;
    p.scene = sol.scene;
    p.subtasks.assign(sol.subtasks.begin(), sol.subtasks.begin() + static_cast<std::ptrdiff_t>(m));
    p.m = m;
    return p;
}

Solution prefix_as_solution(const TracePrefix& p) {
    Solution sol;
    sol.scene = p.scene;
    sol.subtasks = p.subtasks;
    return sol;
}

// ---------------------------------------------------------------------------
// Lexical helpers
// ---------------------------------------------------------------------------
namespace code_text {

std::string strip_comments(const std::string& code) {
    std::string out;
    out.reserve(code.size());
    char quote = 0;
    for (std::size_t i = 0; i < code.size(); ++i) {
        char c = code[i];
        if (quote) {
            out.push_back(c);
            if (c == quote && (i == 0 || code[i - 1] != '\\')) quote = 0;
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            out.push_back(c);
            continue;
        }
        if (c == '#') {
            while (i < code.size() && code[i] != '\n') ++i;
            if (i < code.size()) out.push_back('\n');
            continue;
        }
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> called_identifiers(const std::string& code) {
    std::string text = strip_comments(code);
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '(') continue;
        std::size_t end = i;
        std::size_t begin = end;
        while (begin > 0 && is_ident_char(text[begin - 1])) --begin;
        if (begin == end) continue;
        if (std::isdigit(static_cast<unsigned char>(text[begin]))) continue;
        std::string ident = text.substr(begin, end - begin);
        // `def name(...)` declares, it does not call.
        std::size_t k = begin;
        while (k > 0 && (text[k - 1] == ' ' || text[k - 1] == '\t')) --k;
        if (k >= 3 && text.compare(k - 3, 3, "def") == 0 && (k == 3 || !is_ident_char(text[k - 4])))
            continue;
        if (seen.insert(ident).second) out.push_back(std::move(ident));
    }
    return out;
}

std::vector<std::string> string_literals(const std::string& code) {
    std::string text = strip_comments(code);
    std::vector<std::string> out;
    char quote = 0;
    std::string cur;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quote) {
            if (c == quote && (i == 0 || text[i - 1] != '\\')) {
                out.push_back(cur);
                cur.clear();
                quote = 0;
            } else if (c != '\n') {
                cur.push_back(c);
            } else {
                cur.clear();  // unterminated on this line
                quote = 0;
            }
        } else if (c == '\'' || c == '"') {
            quote = c;
        }
    }
    return out;
}

std::vector<ApiCall> api_calls_with_args(const std::string& code, const std::set<std::string>& apis) {
    std::string text = strip_comments(code);
    std::vector<ApiCall> out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '(') continue;
        std::size_t end = i;
        std::size_t begin = end;
        while (begin > 0 && is_ident_char(text[begin - 1])) --begin;
        if (begin == end) continue;
        std::string ident = text.substr(begin, end - begin);
        if (!apis.count(ident)) continue;

        // Balanced scan to the matching ')'; arguments may span lines.
        int depth = 0;
        std::size_t close = std::string::npos;
        std::vector<std::string> args;
        std::string cur;
        char quote = 0;
        for (std::size_t k = i; k < text.size(); ++k) {
            char c = text[k];
            if (quote) {
                cur.push_back(c);
                if (c == quote) quote = 0;
                continue;
            }
            if (c == '\'' || c == '"') {
                quote = c;
                cur.push_back(c);
                continue;
            }
            if (c == '(' || c == '[') {
                ++depth;
                if (c == '(' && depth == 1) continue;
            } else if (c == ')' || c == ']') {
                --depth;
                if (depth == 0 && c == ')') {
                    close = k;
                    break;
                }
            } else if (c == ',' && depth == 1) {
                args.push_back(cur);
                cur.clear();
                continue;
            }
            cur.push_back(c);
        }
        if (close == std::string::npos) continue;
        if (!trim(cur).empty() || !args.empty()) args.push_back(cur);

        ApiCall call;
        call.api = ident;
        for (auto& a : args) {
            std::string t = trim(a);
            if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front()) {
                call.literal_args.push_back(t.substr(1, t.size() - 2));
            } else {
                call.literal_args.emplace_back();
            }
        }
        out.push_back(std::move(call));
    }
    return out;
}

namespace {

// RHS of `name = ...` where = is not ==; name must start the statement.
std::optional<std::string> assignment_rhs(const std::string& stripped, const std::string& name) {
    std::size_t pos = 0;
    while ((pos = stripped.find(name, pos)) != std::string::npos) {
        std::size_t after = pos + name.size();
        bool bounded_left = pos == 0 || !is_ident_char(stripped[pos - 1]);
        bool bounded_right = after >= stripped.size() || !is_ident_char(stripped[after]);
        if (!bounded_left || !bounded_right) {
            pos = after;
            continue;
        }
        std::size_t k = after;
        while (k < stripped.size() && (stripped[k] == ' ' || stripped[k] == '\t')) ++k;
        if (k < stripped.size() && stripped[k] == '=' &&
            (k + 1 >= stripped.size() || stripped[k + 1] != '=')) {
            std::size_t eol = stripped.find('\n', k);
            // A trailing open paren/bracket continues on the next lines.
            std::string rhs = stripped.substr(k + 1, (eol == std::string::npos ? stripped.size() : eol) - k - 1);
            int depth = 0;
            for (char c : rhs)
                if (c == '(' || c == '[')
                    ++depth;
                else if (c == ')' || c == ']')
                    --depth;
            while (depth > 0 && eol != std::string::npos) {
                std::size_t next = stripped.find('\n', eol + 1);
                std::string more =
                    stripped.substr(eol + 1, (next == std::string::npos ? stripped.size() : next) - eol - 1);
                for (char c : more)
                    if (c == '(' || c == '[')
                        ++depth;
                    else if (c == ')' || c == ']')
                        --depth;
                rhs += " " + more;
                eol = next;
            }
            return trim(rhs);
        }
        pos = after;
    }
    return std::nullopt;
}

}  // namespace

bool has_success_assignment(const std::string& code) {
    std::string stripped = strip_comments(code);
    if (assignment_rhs(stripped, "success")) return true;
    // `return reward, success` also counts as a success condition.
    return stripped.find("return") != std::string::npos &&
           stripped.find("success") != std::string::npos;
}

bool has_tuple_result_assignment(const std::string& code) {
    std::string stripped = strip_comments(code);
    // `a, b = ...` at statement level.
    for (std::size_t i = 0; i < stripped.size(); ++i) {
        if (stripped[i] != ',') continue;
        // identifier to the left
        std::size_t l = i;
        while (l > 0 && (stripped[l - 1] == ' ' || stripped[l - 1] == '\t')) --l;
        std::size_t lb = l;
        while (lb > 0 && is_ident_char(stripped[lb - 1])) --lb;
        if (lb == l) continue;
        // identifier to the right, then '='
        std::size_t r = i + 1;
        while (r < stripped.size() && (stripped[r] == ' ' || stripped[r] == '\t')) ++r;
        std::size_t rb = r;
        while (rb < stripped.size() && is_ident_char(stripped[rb])) ++rb;
        if (rb == r) continue;
        std::size_t eq = rb;
        while (eq < stripped.size() && (stripped[eq] == ' ' || stripped[eq] == '\t')) ++eq;
        if (eq < stripped.size() && stripped[eq] == '=' &&
            (eq + 1 >= stripped.size() || stripped[eq + 1] != '='))
            return true;
    }
    return false;
}

std::optional<std::string> combined_reward_expr(const std::string& code) {
    return assignment_rhs(strip_comments(code), "reward");
}

std::vector<std::string> reward_component_names(const std::string& code) {
    std::string stripped = strip_comments(code);
    std::vector<std::string> out;
    std::set<std::string> seen;
    std::size_t pos = 0;
    while ((pos = stripped.find("reward_", pos)) != std::string::npos) {
        bool bounded_left = pos == 0 || !is_ident_char(stripped[pos - 1]);
        std::size_t end = pos;
        while (end < stripped.size() && is_ident_char(stripped[end])) ++end;
        std::string name = stripped.substr(pos, end - pos);
        std::size_t k = end;
        while (k < stripped.size() && (stripped[k] == ' ' || stripped[k] == '\t')) ++k;
        bool assigned = k < stripped.size() && stripped[k] == '=' &&
                        (k + 1 >= stripped.size() || stripped[k + 1] != '=');
        if (bounded_left && assigned && seen.insert(name).second) out.push_back(name);
        pos = end;
    }
    return out;
}

std::optional<std::string> success_expr(const std::string& code) {
    return assignment_rhs(strip_comments(code), "success");
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex(std::string_view data) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(data);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

}  // namespace code_text

std::string content_key(const Subtask& sub) {
    nlohmann::json j = {{"name", sub.name},
                        {"variant", to_string(sub.supervision.variant)},
                        {"code", sub.supervision.code}};
    return j.dump();
}

std::string content_key(const SceneConfiguration& scene) {
    nlohmann::json j;
    to_json(j, scene);
    return j.dump();
}

std::string prefix_content_key(const SceneConfiguration& scene, const std::vector<Subtask>& subtasks,
                               std::size_t m) {
    std::string acc = content_key(scene);
    for (std::size_t i = 0; i < m && i < subtasks.size(); ++i) {
        acc += '\x1f';
        acc += content_key(subtasks[i]);
    }
    return code_text::fnv1a64_hex(acc) + ":" + std::to_string(m);
}

bool same_subtask_sequence(const std::vector<Subtask>& a, const std::vector<Subtask>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].name != b[i].name || a[i].supervision.variant != b[i].supervision.variant ||
            a[i].supervision.code != b[i].supervision.code)
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const Joint& v) {
    j = {{"name", v.name}, {"type", v.type}, {"parent", v.parent_link}, {"child", v.child_link}};
}
void from_json(const nlohmann::json& j, Joint& v) {
    v.name = j.at("name").get<std::string>();
    v.type = j.value("type", "revolute");
    v.parent_link = j.value("parent", "");
    v.child_link = j.value("child", "");
}

void to_json(nlohmann::json& j, const ArticulationTree& v) {
    j = {{"links", v.links}, {"joints", v.joints}};
}
void from_json(const nlohmann::json& j, ArticulationTree& v) {
    v.links = j.value("links", std::vector<std::string>{});
    v.joints = j.value("joints", std::vector<Joint>{});
}

void to_json(nlohmann::json& j, const TaskSpec& v) {
    j = {{"name", v.name},
         {"description", v.description},
         {"articulation_tree", v.articulation_tree},
         {"link_semantics", v.link_semantics},
         {"relevant_links", v.relevant_links},
         {"relevant_joints", v.relevant_joints},
         {"initial_config", v.initial_config}};
}
void from_json(const nlohmann::json& j, TaskSpec& v) {
    v.name = j.at("name").get<std::string>();
    v.description = j.value("description", "");
    if (j.contains("articulation_tree")) v.articulation_tree = j.at("articulation_tree");
    v.link_semantics = j.value("link_semantics", std::map<std::string, std::string>{});
    v.relevant_links = j.value("relevant_links", std::vector<std::string>{});
    v.relevant_joints = j.value("relevant_joints", std::vector<std::string>{});
    v.initial_config = j.value("initial_config", "");
}

void to_json(nlohmann::json& j, const SceneObject& v) {
    j = {{"name", v.name}, {"asset", v.asset_id}, {"scale", v.scale}, {"position", v.position}};
}
void from_json(const nlohmann::json& j, SceneObject& v) {
    v.name = j.at("name").get<std::string>();
    v.asset_id = j.value("asset", "");
    v.scale = j.value("scale", 1.0);
    if (j.contains("position")) {
        auto p = j.at("position").get<std::vector<double>>();
        for (std::size_t i = 0; i < std::min<std::size_t>(3, p.size()); ++i) v.position[i] = p[i];
    }
}

void to_json(nlohmann::json& j, const SceneConfiguration& v) {
    j = {{"objects", v.objects}, {"embodiment", v.embodiment}, {"raw_text", v.raw_text}};
}
void from_json(const nlohmann::json& j, SceneConfiguration& v) {
    v.objects = j.value("objects", std::vector<SceneObject>{});
    v.embodiment = j.value("embodiment", "");
    v.raw_text = j.value("raw_text", "");
}

void to_json(nlohmann::json& j, const Subtask& v) {
    j = {{"name", v.name},
         {"variant", to_string(v.supervision.variant)},
         {"code", v.supervision.code}};
    if (v.success_bit) j["success"] = *v.success_bit;
}
void from_json(const nlohmann::json& j, Subtask& v) {
    v.name = j.at("name").get<std::string>();
    v.supervision.variant = variant_from_string(j.at("variant").get<std::string>());
    v.supervision.code = j.at("code").get<std::string>();
    v.supervision.api_calls = code_text::called_identifiers(v.supervision.code);
    if (j.contains("success")) v.success_bit = j.at("success").get<bool>();
}

void to_json(nlohmann::json& j, const Solution& v) {
    j = {{"scene", v.scene}, {"subtasks", v.subtasks}};
    if (v.overall_success) j["overall_success"] = *v.overall_success;
}
void from_json(const nlohmann::json& j, Solution& v) {
    v.scene = j.value("scene", SceneConfiguration{});
    v.subtasks = j.value("subtasks", std::vector<Subtask>{});
    if (j.contains("overall_success")) v.overall_success = j.at("overall_success").get<bool>();
}

void to_json(nlohmann::json& j, const TracePrefix& v) {
    j = {{"scene", v.scene}, {"subtasks", v.subtasks}, {"m", v.m}};
}
void from_json(const nlohmann::json& j, TracePrefix& v) {
    v.scene = j.value("scene", SceneConfiguration{});
    v.subtasks = j.value("subtasks", std::vector<Subtask>{});
    v.m = j.value("m", v.subtasks.size());
}

void to_json(nlohmann::json& j, const ApiCatalog& v) {
    j = {{"primitive", v.primitive_apis}, {"reward", v.reward_apis}, {"shared", v.shared}};
}
void from_json(const nlohmann::json& j, ApiCatalog& v) {
    v.primitive_apis = j.value("primitive", std::set<std::string>{});
    v.reward_apis = j.value("reward", std::set<std::string>{});
    v.shared = j.value("shared", std::set<std::string>{});
}

nlohmann::json solution_document(const std::string& task_name, const Solution& sol) {
    nlohmann::json j;
    j["task"] = task_name;
    j["scene"] = sol.scene;
    j["subtasks"] = sol.subtasks;
    if (sol.overall_success) j["overall_success"] = *sol.overall_success;
    return j;
}

std::pair<std::string, Solution> solution_from_document(const nlohmann::json& doc) {
    Solution sol;
    sol.scene = doc.value("scene", SceneConfiguration{});
    sol.subtasks = doc.value("subtasks", std::vector<Subtask>{});
    if (doc.contains("overall_success")) sol.overall_success = doc.at("overall_success").get<bool>();
    return {doc.value("task", ""), sol};
}

}  // namespace vergsa
