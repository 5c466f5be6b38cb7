#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gazekit/core.hpp"

namespace gazekit {

struct SpecialTokens {
    std::string im_start = "<im_start>";
    std::string im_end = "<im_end>";
    std::string vision_start = "<vision_start>";
    std::string vision_end = "<vision_end>";
    std::string box_start = "<box_start>";
    std::string box_end = "<box_end>";
    std::string ref_start = "<ref_start>";
    std::string ref_end = "<ref_end>";

    std::vector<std::string_view> all() const;
};

/// Prompt templates may contain "{head}", replaced by the serialized head box.
std::map<Task, std::string> default_task_templates();

struct PromptConfig {
    int lambda_margin = 20;
    SpecialTokens tokens;
    std::string out_of_frame_phrase = "looking out of the image";
    std::string in_frame_phrase = "looking inside the image";
    std::string image_placeholder = "<image>";
    // Empty means no system turn.
    std::string system_prompt;
    std::map<Task, std::string> task_prompt_templates = default_task_templates();
};

void validate(const PromptConfig& cfg);

enum class Role { System, User, Assistant };
std::string_view role_name(Role role);
Role parse_role(std::string_view name);

struct Message {
    Role role = Role::User;
    std::string content;

    bool operator==(const Message&) const = default;
};

struct GazeRecord {
    std::string sample_id;
    Task task = Task::GazeTarget;
    std::vector<Message> messages;
    std::vector<std::string> image_refs;  // RGB first, then HHA when present

    bool operator==(const GazeRecord&) const = default;
};

void validate(const GazeRecord& record, const PromptConfig& cfg);

struct ObjectRef {
    std::string class_label;
    NormBox box;

    bool operator==(const ObjectRef&) const = default;
};

/// What a gaze answer says: either out of frame, or a gaze box with an
/// optional gazed object.
struct GazeStatement {
    bool out_of_frame = false;
    NormBox gaze_box;
    std::optional<ObjectRef> object;
};

std::string serialize_box(const NormBox& b, const PromptConfig& cfg);

NormBox gaze_point_to_box(const GazePoint& g, const PromptConfig& cfg);

/// Throws InvalidInput if the label is empty or contains a configured token.
std::string serialize_object_ref(const std::string& class_label, const NormBox& b,
                                 const PromptConfig& cfg);

std::string serialize_gaze_statement(const GazeStatement& statement, const PromptConfig& cfg);

/// One record per (sample, task). For PersonDetection the answer lists
/// `people` when given, otherwise the sample's own head box.
GazeRecord build_record(const AnnotatedSample& sample, Task task, const PromptConfig& cfg,
                        std::span<const PixelBox> people = {});

/// ChatML rendering of a record using the configured im_start/im_end tokens.
std::string render_chatml(const GazeRecord& record, const PromptConfig& cfg);

/// Parses a model answer. Throws MalformedResponse for unbalanced tokens or
/// an unparseable box body. The object box, when a ref is present, is the
/// box that follows the ref.
Prediction parse_response(std::string_view text, const PromptConfig& cfg,
                          std::string sample_id = {}, Task task = Task::GazeTarget);

/// Inverse of gaze_point_to_box. A box squeezed against an image border
/// recovers its center from the margin; otherwise it is the box center.
GazePoint gaze_box_to_point(const NormBox& b, const PromptConfig& cfg);

}  // namespace gazekit

namespace gazekit {

/// Gaze box of a prediction: its first box.
std::optional<NormBox> gaze_box_of(const Prediction& p);
/// Object box of a prediction: the box attached to its class label (kept last).
std::optional<NormBox> object_box_of(const Prediction& p);

}  // namespace gazekit
