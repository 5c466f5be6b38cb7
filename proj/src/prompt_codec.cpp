#include "gazekit/prompt_codec.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <set>

namespace gazekit {

namespace {

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
    if (from.empty()) return text;
    for (std::size_t pos = text.find(from); pos != std::string::npos;
         pos = text.find(from, pos + to.size()))
        text.replace(pos, from.size(), to);
    return text;
}

int center_bin(double v) {
    return std::clamp(static_cast<int>(std::floor(v * kNormBins)), 0, kMaxNormBin);
}

bool contains_token(std::string_view text, const PromptConfig& cfg) {
    for (auto tok : cfg.tokens.all())
        if (text.find(tok) != std::string_view::npos) return true;
    return false;
}

// Recursive-descent reader for "(x1,y1),(x2,y2)" with optional blanks.
class BoxBodyReader {
public:
    BoxBodyReader(std::string_view body, std::size_t base) : body_(body), base_(base) {}

    std::array<long long, 4> read() {
        std::array<long long, 4> v{};
        expect('(');
        v[0] = integer();
        expect(',');
        v[1] = integer();
        expect(')');
        expect(',');
        expect('(');
        v[2] = integer();
        expect(',');
        v[3] = integer();
        expect(')');
        skip_blank();
        if (pos_ != body_.size()) fail("trailing characters in box");
        return v;
    }

private:
    void skip_blank() {
        while (pos_ < body_.size() && (body_[pos_] == ' ' || body_[pos_] == '\t')) ++pos_;
    }
    void expect(char c) {
        skip_blank();
        if (pos_ >= body_.size() || body_[pos_] != c)
            fail(std::string("expected '") + c + "' in box");
        ++pos_;
    }
    long long integer() {
        skip_blank();
        long long value = 0;
        const char* first = body_.data() + pos_;
        const char* last = body_.data() + body_.size();
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc{} || ptr == first) fail("expected integer coordinate in box");
        pos_ += static_cast<std::size_t>(ptr - first);
        return value;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw MalformedResponse(what, base_ + pos_);
    }

    std::string_view body_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::string_view> SpecialTokens::all() const {
    return {im_start, im_end, vision_start, vision_end, box_start, box_end, ref_start, ref_end};
}

std::map<Task, std::string> default_task_templates() {
    return {
        {Task::PersonDetection, "Detect every person in the image."},
        {Task::GazeTarget, "Where is the person at {head} looking?"},
        {Task::GazeObject, "Which object is the person at {head} looking at?"},
        {Task::GazeInOut, "Is the person at {head} looking inside or outside the image?"},
    };
}

void validate(const PromptConfig& cfg) {
    if (cfg.lambda_margin < 1 || cfg.lambda_margin > 499)
        throw InvalidInput("lambda_margin must lie in [1,499]");
    const auto toks = cfg.tokens.all();
    std::set<std::string_view> seen;
    for (auto t : toks) {
        if (t.empty()) throw InvalidInput("special tokens must be non-empty");
        if (!seen.insert(t).second)
            throw InvalidInput("special tokens must be distinct, '" + std::string(t) + "' repeats");
    }
    if (cfg.out_of_frame_phrase.empty()) throw InvalidInput("out_of_frame_phrase is empty");
    if (cfg.out_of_frame_phrase == cfg.in_frame_phrase)
        throw InvalidInput("in- and out-of-frame phrases must differ");
    for (Task t : all_tasks())
        if (!cfg.task_prompt_templates.contains(t))
            throw InvalidInput("no prompt template for task " + std::string(task_name(t)));
}

std::string_view role_name(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

Role parse_role(std::string_view name) {
    if (name == "system") return Role::System;
    if (name == "user") return Role::User;
    if (name == "assistant") return Role::Assistant;
    throw InvalidInput("unknown role '" + std::string(name) + "'");
}

void validate(const GazeRecord& record, const PromptConfig& cfg) {
    std::size_t i = 0;
    if (!record.messages.empty() && record.messages[0].role == Role::System) ++i;
    Role expected = Role::User;
    for (; i < record.messages.size(); ++i) {
        const auto& m = record.messages[i];
        if (m.role != expected)
            throw InvalidInput("message " + std::to_string(i) + " breaks user/assistant alternation");
        if (m.role == Role::User && !record.image_refs.empty() && i <= 1 &&
            (m.content.find(cfg.tokens.vision_start) == std::string::npos ||
             m.content.find(cfg.tokens.vision_end) == std::string::npos))
            throw InvalidInput("user turn with images lacks vision tokens");
        expected = expected == Role::User ? Role::Assistant : Role::User;
    }
}

std::string serialize_box(const NormBox& b, const PromptConfig& cfg) {
    validate(b);
    std::string s = cfg.tokens.box_start;
    s += '(' + std::to_string(b.x1) + ',' + std::to_string(b.y1) + "),(" + std::to_string(b.x2) +
         ',' + std::to_string(b.y2) + ')';
    s += cfg.tokens.box_end;
    return s;
}

NormBox gaze_point_to_box(const GazePoint& g, const PromptConfig& cfg) {
    validate(g);
    const int lambda = cfg.lambda_margin;
    const int cx = center_bin(g.x), cy = center_bin(g.y);
    auto clamp_bin = [](int v) { return std::clamp(v, 0, kMaxNormBin); };
    return {clamp_bin(cx - lambda), clamp_bin(cy - lambda), clamp_bin(cx + lambda),
            clamp_bin(cy + lambda)};
}

GazePoint gaze_box_to_point(const NormBox& b, const PromptConfig& cfg) {
    validate(b);
    const int lambda = cfg.lambda_margin;
    auto axis = [lambda](int lo, int hi) {
        double center = (lo + hi) / 2.0;
        if (hi - lo < 2 * lambda) {
            if (lo == 0 && hi < kMaxNormBin && hi >= lambda)
                center = hi - lambda;
            else if (hi == kMaxNormBin && lo > 0 && lo <= kMaxNormBin - lambda)
                center = lo + lambda;
        }
        return std::clamp((center + 0.5) / kNormBins, 0.0, 1.0);
    };
    return {axis(b.x1, b.x2), axis(b.y1, b.y2)};
}

std::string serialize_object_ref(const std::string& class_label, const NormBox& b,
                                 const PromptConfig& cfg) {
    if (class_label.empty()) throw InvalidInput("object class label is empty");
    if (contains_token(class_label, cfg))
        throw InvalidInput("object class label contains a special token: " + class_label);
    return cfg.tokens.ref_start + class_label + cfg.tokens.ref_end + serialize_box(b, cfg);
}

std::string serialize_gaze_statement(const GazeStatement& statement, const PromptConfig& cfg) {
    if (statement.out_of_frame) return cfg.out_of_frame_phrase;
    std::string s = serialize_box(statement.gaze_box, cfg);
    if (statement.object)
        s += serialize_object_ref(statement.object->class_label, statement.object->box, cfg);
    return s;
}

GazeRecord build_record(const AnnotatedSample& sample, Task task, const PromptConfig& cfg,
                        std::span<const PixelBox> people) {
    validate(cfg);
    GazeRecord rec;
    rec.sample_id = sample.sample_id;
    rec.task = task;
    rec.image_refs.push_back(sample.image_path);
    if (sample.hha_path) rec.image_refs.push_back(*sample.hha_path);

    std::string user;
    for (std::size_t i = 0; i < rec.image_refs.size(); ++i)
        user += cfg.tokens.vision_start + cfg.image_placeholder + cfg.tokens.vision_end;
    user += '\n';
    const std::string head = serialize_box(norm_box(sample.head_box, sample.image_size), cfg);
    user += replace_all(cfg.task_prompt_templates.at(task), "{head}", head);

    std::string answer;
    switch (task) {
        case Task::PersonDetection: {
            if (people.empty()) people = std::span<const PixelBox>(&sample.head_box, 1);
            for (const auto& p : people) answer += serialize_box(norm_box(p, sample.image_size), cfg);
            break;
        }
        case Task::GazeTarget: {
            if (!sample.in_frame) {
                answer = cfg.out_of_frame_phrase;
                break;
            }
            if (sample.gaze_points.empty())
                throw InvalidInput("sample " + sample.sample_id + " is in frame without gaze points");
            answer = serialize_box(gaze_point_to_box(centroid(sample.gaze_points), cfg), cfg);
            break;
        }
        case Task::GazeObject: {
            GazeStatement st;
            st.out_of_frame = !sample.in_frame;
            if (sample.in_frame) {
                if (!sample.gazed_object)
                    throw InvalidInput("sample " + sample.sample_id +
                                       " has no gazed object for the gaze_object task");
                if (sample.gaze_points.empty())
                    throw InvalidInput("sample " + sample.sample_id + " is in frame without gaze points");
                st.gaze_box = gaze_point_to_box(centroid(sample.gaze_points), cfg);
                st.object = ObjectRef{sample.gazed_object->class_label,
                                      norm_box(sample.gazed_object->bbox, sample.image_size)};
            }
            answer = serialize_gaze_statement(st, cfg);
            break;
        }
        case Task::GazeInOut:
            answer = sample.in_frame ? cfg.in_frame_phrase : cfg.out_of_frame_phrase;
            break;
    }

    if (!cfg.system_prompt.empty()) rec.messages.push_back({Role::System, cfg.system_prompt});
    rec.messages.push_back({Role::User, std::move(user)});
    rec.messages.push_back({Role::Assistant, std::move(answer)});
    return rec;
}

std::string render_chatml(const GazeRecord& record, const PromptConfig& cfg) {
    std::string out;
    for (const auto& m : record.messages) {
        out += cfg.tokens.im_start;
        out += role_name(m.role);
        out += '\n';
        out += m.content;
        out += cfg.tokens.im_end;
        out += '\n';
    }
    return out;
}

Prediction parse_response(std::string_view text, const PromptConfig& cfg, std::string sample_id,
                          Task task) {
    const auto& tk = cfg.tokens;
    Prediction pred;
    pred.sample_id = std::move(sample_id);
    pred.task = task;
    pred.raw_text = std::string(text);

    auto find_next = [&](std::size_t from) {
        std::size_t best = std::string_view::npos;
        std::string_view which;
        for (std::string_view tok : {std::string_view(tk.box_start), std::string_view(tk.box_end),
                                     std::string_view(tk.ref_start), std::string_view(tk.ref_end)}) {
            const auto at = text.find(tok, from);
            if (at < best || (at == best && at != std::string_view::npos && tok.size() > which.size())) {
                best = at;
                which = tok;
            }
        }
        return std::pair{best, which};
    };

    auto read_box = [&](std::size_t start) {
        const std::size_t body_begin = start + tk.box_start.size();
        const std::size_t end = text.find(tk.box_end, body_begin);
        if (end == std::string_view::npos) throw MalformedResponse("unterminated box", start);
        const auto raw = BoxBodyReader(text.substr(body_begin, end - body_begin), body_begin).read();
        std::array<int, 4> v{};
        for (std::size_t i = 0; i < 4; ++i) {
            const long long c = std::clamp<long long>(raw[i], 0, kMaxNormBin);
            if (c != raw[i]) pred.clamped = true;
            v[i] = static_cast<int>(c);
        }
        NormBox b{v[0], v[1], v[2], v[3]};
        if (b.x1 > b.x2) {
            std::swap(b.x1, b.x2);
            pred.clamped = true;
        }
        if (b.y1 > b.y2) {
            std::swap(b.y1, b.y2);
            pred.clamped = true;
        }
        pred.boxes.push_back(b);
        return end + tk.box_end.size();
    };

    std::optional<std::size_t> object_index;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto [at, tok] = find_next(pos);
        if (at == std::string_view::npos) break;
        if (tok == tk.box_start) {
            pos = read_box(at);
        } else if (tok == tk.ref_start) {
            const std::size_t label_begin = at + tk.ref_start.size();
            const std::size_t end = text.find(tk.ref_end, label_begin);
            if (end == std::string_view::npos) throw MalformedResponse("unterminated ref", at);
            const auto label = text.substr(label_begin, end - label_begin);
            if (label.empty()) throw MalformedResponse("empty object label", label_begin);
            if (contains_token(label, cfg))
                throw MalformedResponse("special token inside object label", label_begin);
            std::size_t next = end + tk.ref_end.size();
            while (next < text.size() && (text[next] == ' ' || text[next] == '\t')) ++next;
            if (text.substr(next, tk.box_start.size()) != tk.box_start)
                throw MalformedResponse("object label not followed by a box", next);
            pos = read_box(next);
            pred.class_label = std::string(label);
            object_index = pred.boxes.size() - 1;
        } else {
            throw MalformedResponse("unmatched closing token " + std::string(tok), at);
        }
    }
    // Keep the object box last so it can be recovered from the Prediction alone.
    if (object_index && *object_index + 1 != pred.boxes.size()) {
        const NormBox obj = pred.boxes[*object_index];
        pred.boxes.erase(pred.boxes.begin() + static_cast<std::ptrdiff_t>(*object_index));
        pred.boxes.push_back(obj);
    }
    pred.out_of_frame = text.find(cfg.out_of_frame_phrase) != std::string_view::npos;
    return pred;
}

}  // namespace gazekit

namespace gazekit {

std::optional<NormBox> gaze_box_of(const Prediction& p) {
    if (p.boxes.empty()) return std::nullopt;
    return p.boxes.front();
}

std::optional<NormBox> object_box_of(const Prediction& p) {
    if (!p.class_label || p.boxes.empty()) return std::nullopt;
    return p.boxes.back();
}

}  // namespace gazekit
