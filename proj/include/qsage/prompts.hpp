#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qsage/registry.hpp"

namespace qsage {

enum class Role { System, User, Assistant };

std::string_view to_string(Role r);
Role parse_role(std::string_view name);

struct Message {
  Role role;
  std::string text;

  friend bool operator==(const Message &, const Message &) = default;
};

/// Chat history of one episode. System messages may only lead; after them
/// user and assistant strictly alternate, starting with the user.
class Conversation {
public:
  Conversation() = default;
  explicit Conversation(std::string system_prompt);

  const std::vector<Message> &messages() const { return messages_; }
  bool empty() const { return messages_.empty(); }
  /// Completed user/assistant pairs.
  std::size_t turns() const;
  std::size_t non_system_count() const;

  /// Appends one message; throws Validation on a broken alternation.
  void push(Role role, std::string text);

  nlohmann::json to_json() const;
  static Conversation from_json(const nlohmann::json &j);

  friend bool operator==(const Conversation &, const Conversation &) = default;

private:
  std::vector<Message> messages_;
};

/// Returns `conv` grown by exactly one user and one assistant message.
Conversation append_turn(const Conversation &conv, std::string user_text,
                         std::string assistant_text);

enum class TemplateKind { Coder, Feedback, InformedFeedback };

std::string_view to_string(TemplateKind k);

struct PromptTemplate {
  std::string id;
  TemplateKind kind = TemplateKind::Coder;
  std::string body;

  /// Identifier placeholders in order of first appearance.
  std::vector<std::string> placeholders() const;
  /// Throws Validation when a required placeholder of this kind is absent.
  void check() const;
};

/// Campaign-level strings shared by every coder prompt.
struct PromptContext {
  std::string stack =
      "Python 3 with numpy, scipy, qiskit (1.x), qiskit-aer, qiskit-algorithms, "
      "qiskit-nature and dwave-neal. Do not install packages and do not access "
      "the network.";
  /// `{label}` is replaced by the instance's expected-output label.
  std::string output_format =
      "Print the {label} as the last line of standard output, exactly in the "
      "form `RESULT: <value>` with <value> a plain decimal or scientific "
      "floating-point number. Reply with the complete Python script only, in a "
      "single fenced code block.";
};

/// Substitutes `{name}` placeholders; `{{` and `}}` are literal braces and
/// braces around anything other than an identifier are left untouched.
/// Throws Validation naming the first unresolved placeholder.
std::string substitute(std::string_view body, const std::map<std::string, std::string> &values);

/// "- L = 2 (lattice size (spins))" lines for every prompt-visible parameter.
std::string parameter_table(const ProblemInstance &instance);

/// Family convention text with the instance's parameter values filled in.
std::string problem_statement(const ProblemInstance &instance);

std::string render_coder(const ProblemInstance &instance, const PromptTemplate &tmpl,
                         const PromptContext &ctx = {});

/// `expected` must be present iff the template is of informed kind.
std::string render_feedback(const Conversation &conv, std::string_view run_output,
                            const PromptTemplate &tmpl,
                            std::optional<double> expected = std::nullopt);

constexpr std::size_t kFeedbackOutputLimit = 8000;

/// Text the feedback prompt shows for one execution (tail-truncated).
std::string feedback_output(std::string_view run_output);

struct TemplateSet {
  PromptTemplate feedback;
  PromptTemplate informed_feedback;
  std::map<std::string, PromptTemplate> coder; ///< keyed by template id

  /// `<dir>/feedback.txt`, `<dir>/informed_feedback.txt` and every
  /// `<dir>/<id>/coder.txt` below it.
  static TemplateSet load(const std::filesystem::path &dir);
  const PromptTemplate &coder_for(const ProblemInstance &instance) const;
  /// Concatenated bodies in a fixed order (for campaign hashing).
  std::string fingerprint() const;
};

} // namespace qsage
