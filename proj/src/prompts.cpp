#include "qsage/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "qsage/error.hpp"
#include "qsage/util.hpp"

namespace qsage {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Length of an identifier placeholder body at `pos` (just after '{'), or 0.
std::size_t placeholder_len(std::string_view s, std::size_t pos) {
  if (pos >= s.size() || !ident_start(s[pos])) return 0;
  std::size_t end = pos + 1;
  while (end < s.size() && ident_char(s[end])) ++end;
  return end < s.size() && s[end] == '}' ? end - pos : 0;
}

template <class F> void scan(std::string_view body, F &&on_placeholder, std::string *out) {
  for (std::size_t i = 0; i < body.size();) {
    const char c = body[i];
    if ((c == '{' || c == '}') && i + 1 < body.size() && body[i + 1] == c) {
      if (out) *out += c;
      i += 2;
      continue;
    }
    if (c == '{') {
      if (const std::size_t n = placeholder_len(body, i + 1)) {
        on_placeholder(std::string(body.substr(i + 1, n)));
        i += n + 2;
        continue;
      }
    }
    if (out) *out += c;
    ++i;
  }
}

const std::vector<std::string> &required_placeholders(TemplateKind k) {
  static const std::vector<std::string> coder{"problem", "stack", "output_format"};
  static const std::vector<std::string> feedback{"output"};
  static const std::vector<std::string> informed{"output", "expected"};
  switch (k) {
  case TemplateKind::Coder: return coder;
  case TemplateKind::Feedback: return feedback;
  case TemplateKind::InformedFeedback: return informed;
  }
  return coder;
}

std::map<std::string, std::string> visible_params(const ProblemInstance &in) {
  std::map<std::string, std::string> out;
  const FamilySchema *family = find_family(in.descriptor);
  for (const auto &[name, value] : in.params) {
    bool hidden = false;
    if (family)
      for (const auto &spec : family->params)
        if (spec.name == name) hidden = spec.oracle_only;
    if (!hidden) out[name] = format_param(value);
  }
  return out;
}

PromptTemplate load_template(const std::filesystem::path &path, std::string id, TemplateKind kind) {
  PromptTemplate t{std::move(id), kind, read_text_file(path)};
  t.check();
  return t;
}

} // namespace

std::string_view to_string(Role r) {
  switch (r) {
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
  throw Error(ErrorCode::Parse, "unknown role '" + std::string(name) + "'");
}

Conversation::Conversation(std::string system_prompt) {
  if (!system_prompt.empty()) messages_.push_back({Role::System, std::move(system_prompt)});
}

std::size_t Conversation::non_system_count() const {
  return static_cast<std::size_t>(std::count_if(
      messages_.begin(), messages_.end(), [](const Message &m) { return m.role != Role::System; }));
}

std::size_t Conversation::turns() const { return non_system_count() / 2; }

void Conversation::push(Role role, std::string text) {
  const Role last = messages_.empty() ? Role::System : messages_.back().role;
  bool ok = false;
  switch (role) {
  case Role::System: ok = last == Role::System; break;
  case Role::User: ok = last != Role::User; break;
  case Role::Assistant: ok = last == Role::User; break;
  }
  if (!ok)
    throw Error(ErrorCode::Validation, "conversation alternation violated: " +
                                           std::string(to_string(role)) + " after " +
                                           std::string(to_string(last)));
  messages_.push_back({role, std::move(text)});
}

nlohmann::json Conversation::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto &m : messages_)
    arr.push_back({{"role", std::string(to_string(m.role))}, {"content", m.text}});
  return arr;
}

Conversation Conversation::from_json(const nlohmann::json &j) {
  Conversation c;
  try {
    for (const auto &m : j)
      c.push(parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>());
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::Parse, std::string("conversation: ") + e.what());
  }
  return c;
}

Conversation append_turn(const Conversation &conv, std::string user_text,
                         std::string assistant_text) {
  Conversation next = conv;
  next.push(Role::User, std::move(user_text));
  next.push(Role::Assistant, std::move(assistant_text));
  return next;
}

std::string_view to_string(TemplateKind k) {
  switch (k) {
  case TemplateKind::Coder: return "coder";
  case TemplateKind::Feedback: return "feedback";
  case TemplateKind::InformedFeedback: return "informed_feedback";
  }
  return "coder";
}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> out;
  scan(
      body,
      [&](std::string name) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
      },
      nullptr);
  return out;
}

void PromptTemplate::check() const {
  const auto present = placeholders();
  for (const auto &name : required_placeholders(kind))
    if (std::find(present.begin(), present.end(), name) == present.end())
      throw Error(ErrorCode::Validation, std::string(to_string(kind)) + " template '" + id +
                                             "' lacks placeholder {" + name + "}");
  if (kind == TemplateKind::Feedback &&
      std::find(present.begin(), present.end(), "expected") != present.end())
    throw Error(ErrorCode::Validation,
                "feedback template '" + id + "' must not reference {expected}");
}

std::string substitute(std::string_view body, const std::map<std::string, std::string> &values) {
  std::string out;
  out.reserve(body.size());
  std::optional<std::string> missing;
  scan(
      body,
      [&](const std::string &name) {
        if (auto it = values.find(name); it != values.end())
          out += it->second;
        else if (!missing)
          missing = name;
      },
      &out);
  if (missing) throw Error(ErrorCode::Validation, "unresolved placeholder {" + *missing + "}");
  return out;
}

std::string parameter_table(const ProblemInstance &instance) {
  const FamilySchema *family = find_family(instance.descriptor);
  const auto values = visible_params(instance);
  std::string out;
  std::vector<std::string> seen;
  if (family)
    for (const auto &spec : family->params) {
      auto it = values.find(spec.name);
      if (it == values.end()) continue;
      out += "- " + spec.name + " = " + it->second + " (" + spec.description + ")\n";
      seen.push_back(spec.name);
    }
  for (const auto &[name, v] : values)
    if (std::find(seen.begin(), seen.end(), name) == seen.end())
      out += "- " + name + " = " + v + "\n";
  return out;
}

std::string problem_statement(const ProblemInstance &instance) {
  const FamilySchema *family = find_family(instance.descriptor);
  if (!family)
    throw Error(ErrorCode::UnknownFamily, "unknown family '" + instance.descriptor + "'");
  return substitute(family->convention, visible_params(instance));
}

std::string render_coder(const ProblemInstance &instance, const PromptTemplate &tmpl,
                         const PromptContext &ctx) {
  if (tmpl.kind != TemplateKind::Coder)
    throw Error(ErrorCode::InvalidArgument, "template '" + tmpl.id + "' is not a coder template");
  tmpl.check();
  const FamilySchema *family = find_family(instance.descriptor);
  if (!family)
    throw Error(ErrorCode::UnknownFamily, "unknown family '" + instance.descriptor + "'");

  auto values = visible_params(instance);
  const auto params = values;
  const std::string table = parameter_table(instance);
  values["problem"] = problem_statement(instance);
  values["params"] = table;
  values["stack"] = ctx.stack;
  values["output_format"] =
      substitute(ctx.output_format, {{"label", instance.expected_output_label}});
  values["descriptor"] = instance.descriptor;
  values["title"] = family->title;
  values["label"] = instance.expected_output_label;

  std::string body = tmpl.body;
  const auto names = tmpl.placeholders();
  if (std::find(names.begin(), names.end(), "params") == names.end())
    body += "\n\nParameters:\n{params}";
  std::string text = substitute(body, values);

  for (const auto &[name, v] : params)
    if (text.find(name + " = " + v) == std::string::npos)
      throw Error(ErrorCode::Validation, "rendered prompt lacks parameter " + name);
  return text;
}

std::string feedback_output(std::string_view run_output) {
  return truncate_tail(run_output, kFeedbackOutputLimit);
}

std::string render_feedback(const Conversation &conv, std::string_view run_output,
                            const PromptTemplate &tmpl, std::optional<double> expected) {
  if (conv.non_system_count() == 0)
    throw Error(ErrorCode::InvalidArgument, "feedback needs a non-empty conversation");
  if (tmpl.kind == TemplateKind::Coder)
    throw Error(ErrorCode::InvalidArgument, "template '" + tmpl.id + "' is a coder template");
  tmpl.check();
  const bool informed = tmpl.kind == TemplateKind::InformedFeedback;
  if (informed && !expected)
    throw Error(ErrorCode::InvalidArgument, "informed feedback requires an expected value");
  if (!informed && expected)
    throw Error(ErrorCode::InvalidArgument, "standard feedback must not carry an expected value");
  std::map<std::string, std::string> values{{"output", feedback_output(run_output)}};
  if (expected) values["expected"] = format_number(*expected);
  return substitute(tmpl.body, values);
}

TemplateSet TemplateSet::load(const std::filesystem::path &dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "template directory not found: " + dir.string());
  TemplateSet set;
  set.feedback = load_template(dir / "feedback.txt", "feedback", TemplateKind::Feedback);
  set.informed_feedback = load_template(dir / "informed_feedback.txt", "informed_feedback",
                                        TemplateKind::InformedFeedback);
  for (const auto &entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().filename() != "coder.txt") continue;
    const std::string id = fs::relative(entry.path().parent_path(), dir).generic_string();
    set.coder.emplace(id, load_template(entry.path(), id, TemplateKind::Coder));
  }
  return set;
}

const PromptTemplate &TemplateSet::coder_for(const ProblemInstance &instance) const {
  auto it = coder.find(instance.prompt_template_id);
  if (it == coder.end())
    throw Error(ErrorCode::NotFound,
                "no coder template '" + instance.prompt_template_id + "' for " + instance.id);
  return it->second;
}

std::string TemplateSet::fingerprint() const {
  std::string out = feedback.body + '\0' + informed_feedback.body;
  for (const auto &[id, t] : coder) out += '\0' + id + '\0' + t.body;
  return out;
}

} // namespace qsage
