#include "qsage/sandbox.hpp"

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <regex>

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include "qsage/error.hpp"
#include "qsage/util.hpp"

extern char **environ;

namespace qsage {

namespace {

using Clock = std::chrono::steady_clock;

struct Fd {
  int fd = -1;
  Fd() = default;
  explicit Fd(int f) : fd(f) {}
  Fd(const Fd &) = delete;
  Fd &operator=(const Fd &) = delete;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

void make_pipe(Fd &r, Fd &w) {
  int p[2];
  if (::pipe2(p, O_CLOEXEC) != 0)
    throw Error(ErrorCode::Infrastructure, std::string("pipe: ") + std::strerror(errno));
  r.fd = p[0];
  w.fd = p[1];
}

/// Drops every occurrence of the run directory prefix so captured tracebacks
/// read "solver.py" rather than a random temp path.
std::string strip_prefix_everywhere(const std::string &text, const std::string &prefix) {
  std::string out;
  std::size_t pos = 0;
  for (auto hit = text.find(prefix); hit != std::string::npos; hit = text.find(prefix, pos)) {
    out.append(text, pos, hit - pos);
    pos = hit + prefix.size();
  }
  out.append(text, pos, std::string::npos);
  return out;
}

std::filesystem::path make_workdir(const std::filesystem::path &root) {
  const auto base = root.empty() ? std::filesystem::temp_directory_path() : root;
  std::filesystem::create_directories(base);
  std::string templ = (base / "qsage-run-XXXXXX").string();
  if (!::mkdtemp(templ.data()))
    throw Error(ErrorCode::Infrastructure, "cannot create working directory under " + base.string());
  return templ;
}

/// Reads what is available; returns false on EOF.
bool drain(int fd, std::string &sink, std::size_t cap, bool &truncated) {
  char buf[65536];
  const ssize_t n = ::read(fd, buf, sizeof buf);
  if (n > 0) {
    const std::size_t room = sink.size() < cap ? cap - sink.size() : 0;
    const std::size_t take = std::min<std::size_t>(room, static_cast<std::size_t>(n));
    sink.append(buf, take);
    if (take < static_cast<std::size_t>(n)) truncated = true;
    return true;
  }
  if (n < 0 && (errno == EINTR || errno == EAGAIN)) return true;
  return false;
}

[[noreturn]] void child_fail(int report_fd, char tag) {
  const int err = errno;
  char msg[2] = {tag, static_cast<char>(err & 0x7F)};
  [[maybe_unused]] auto n = ::write(report_fd, msg, 2);
  ::_exit(127);
}

bool try_parse_double(std::string_view tok, double &out) {
  std::string s(tok);
  char *end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return !s.empty() && end == s.c_str() + s.size();
}

} // namespace

std::filesystem::path find_executable(std::string_view command) {
  if (command.empty()) return {};
  auto runnable = [](const std::filesystem::path &p) {
    return std::filesystem::is_regular_file(p) && ::access(p.c_str(), X_OK) == 0;
  };
  if (command.find('/') != std::string_view::npos)
    return runnable(command) ? std::filesystem::path(command) : std::filesystem::path{};
  const char *path = std::getenv("PATH");
  std::string_view dirs = path ? path : "/usr/local/bin:/usr/bin:/bin";
  while (!dirs.empty()) {
    const auto colon = dirs.find(':');
    const auto dir = dirs.substr(0, colon);
    if (!dir.empty()) {
      const auto cand = std::filesystem::path(dir) / command;
      if (runnable(cand)) return cand;
    }
    if (colon == std::string_view::npos) break;
    dirs.remove_prefix(colon + 1);
  }
  return {};
}

ExecutionResult run_script(const RunSpec &spec) {
  if (!(spec.timeout_s > 0)) throw Error(ErrorCode::InvalidArgument, "timeout_s must be positive");
  if (spec.interpreter.empty()) throw Error(ErrorCode::InvalidArgument, "empty interpreter command");
  const auto exe = find_executable(spec.interpreter.front());
  if (exe.empty())
    throw Error(ErrorCode::Infrastructure, "interpreter not found: " + spec.interpreter.front());

  const auto workdir = make_workdir(spec.work_root);
  const auto script_path = workdir / spec.script_name;
  write_file_atomic(script_path, spec.script);

  std::vector<std::string> args = spec.interpreter;
  args[0] = exe.string();
  args.push_back(spec.script_name); // relative to the working directory
  std::vector<char *> argv;
  for (auto &a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  std::vector<std::string> env;
  for (const auto &name : spec.env_allowlist)
    if (!spec.extra_env.contains(name))
      if (const char *v = std::getenv(name.c_str())) env.push_back(name + "=" + v);
  for (const auto &[k, v] : spec.extra_env) env.push_back(k + "=" + v);
  env.push_back("HOME=" + workdir.string());
  env.push_back("TMPDIR=" + workdir.string());
  std::vector<char *> envp;
  for (auto &e : env) envp.push_back(e.data());
  envp.push_back(nullptr);
  const std::string wd = workdir.string();

  Fd out_r, out_w, err_r, err_w, rep_r, rep_w;
  make_pipe(out_r, out_w);
  make_pipe(err_r, err_w);
  make_pipe(rep_r, rep_w);

  const auto t0 = Clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::Infrastructure, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::signal(SIGPIPE, SIG_DFL);
    if (::dup2(out_w.fd, STDOUT_FILENO) < 0 || ::dup2(err_w.fd, STDERR_FILENO) < 0)
      child_fail(rep_w.fd, 'D');
    const int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    if (::chdir(wd.c_str()) != 0) child_fail(rep_w.fd, 'C');
    if (spec.isolate_network) {
      const bool ok = ::unshare(CLONE_NEWNET) == 0 || ::unshare(CLONE_NEWUSER | CLONE_NEWNET) == 0;
      const char tag = ok ? 'N' : 'n';
      [[maybe_unused]] auto n = ::write(rep_w.fd, &tag, 1);
    }
    rlimit core{0, 0};
    ::setrlimit(RLIMIT_CORE, &core);
    if (spec.memory_bytes > 0) {
      rlimit as{spec.memory_bytes, spec.memory_bytes};
      if (::setrlimit(RLIMIT_AS, &as) != 0) child_fail(rep_w.fd, 'R');
    }
    ::execve(argv[0], argv.data(), envp.data());
    child_fail(rep_w.fd, 'E');
  }
  ::setpgid(pid, pid); // also set from the parent to close the race
  out_w.reset();
  err_w.reset();
  rep_w.reset();

  ExecutionResult r;
  const auto deadline = t0 + std::chrono::duration_cast<Clock::duration>(
                                 std::chrono::duration<double>(spec.timeout_s));
  bool out_open = true, err_open = true, reaped = false;
  int status = 0;
  std::optional<Clock::time_point> reap_time;

  auto kill_group = [&] { ::kill(-pid, SIGKILL); };

  while (!reaped || out_open || err_open) {
    const auto now = Clock::now();
    if (!reaped && now >= deadline) {
      r.timed_out = true;
      kill_group();
      ::waitpid(pid, &status, 0);
      reaped = true;
      reap_time = Clock::now();
    }
    // Streams held open by escaped descendants: stop after a short grace.
    if (reaped && reap_time && Clock::now() - *reap_time > std::chrono::seconds(1)) break;

    pollfd fds[2];
    int nfds = 0;
    if (out_open) fds[nfds++] = {out_r.fd, POLLIN, 0};
    if (err_open) fds[nfds++] = {err_r.fd, POLLIN, 0};
    int wait_ms = 50;
    if (!reaped) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
      wait_ms = static_cast<int>(std::clamp<long long>(left, 0, 50));
    }
    if (nfds > 0) {
      const int rc = ::poll(fds, nfds, wait_ms);
      if (rc > 0)
        for (int i = 0; i < nfds; ++i) {
          if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
          const bool is_out = fds[i].fd == out_r.fd;
          if (!drain(fds[i].fd, is_out ? r.stdout_text : r.stderr_text, spec.max_stream_bytes,
                     r.truncated))
            (is_out ? out_open : err_open) = false;
        }
    } else if (!reaped) {
      ::usleep(static_cast<useconds_t>(wait_ms) * 1000);
    }
    if (!reaped) {
      const pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid) {
        reaped = true;
        reap_time = Clock::now();
        kill_group(); // descendants left in the group
      }
    }
  }
  kill_group();
  r.duration_s = std::chrono::duration<double>(reap_time.value_or(Clock::now()) - t0).count();

  std::string report;
  for (;;) {
    char buf[64];
    const ssize_t n = ::read(rep_r.fd, buf, sizeof buf);
    if (n <= 0) break;
    report.append(buf, static_cast<std::size_t>(n));
  }
  std::size_t at = 0;
  if (spec.isolate_network && !report.empty() && (report[0] == 'N' || report[0] == 'n')) {
    r.network_isolated = report[0] == 'N';
    at = 1;
  }
  if (report.size() >= at + 2 && !r.timed_out) {
    std::error_code ec;
    std::filesystem::remove_all(workdir, ec);
    throw Error(ErrorCode::Infrastructure,
                std::string("cannot launch interpreter (") + report[at] + "): " +
                    std::strerror(static_cast<unsigned char>(report[at + 1])));
  }

  if (WIFEXITED(status)) r.exit_status = WEXITSTATUS(status);
  if (WIFSIGNALED(status)) r.signal = WTERMSIG(status);
  r.stdout_text = strip_prefix_everywhere(r.stdout_text, wd + "/");
  r.stderr_text = strip_prefix_everywhere(r.stderr_text, wd + "/");
  if (spec.keep_workdir) {
    r.workdir = workdir;
  } else {
    std::error_code ec;
    std::filesystem::remove_all(workdir, ec);
  }
  return r;
}

nlohmann::json ExecutionResult::to_json() const {
  nlohmann::json j{
      {"exit_status", exit_status ? nlohmann::json(*exit_status) : nlohmann::json(nullptr)},
      {"signal", signal ? nlohmann::json(*signal) : nlohmann::json(nullptr)},
      {"duration_s", duration_s},
      {"timed_out", timed_out},
      {"network_isolated", network_isolated},
      {"truncated", truncated},
      {"stdout", stdout_text},
      {"stderr", stderr_text},
  };
  return j;
}

ExecutionResult ExecutionResult::from_json(const nlohmann::json &j) {
  ExecutionResult r;
  if (!j.at("exit_status").is_null()) r.exit_status = j.at("exit_status").get<int>();
  if (!j.at("signal").is_null()) r.signal = j.at("signal").get<int>();
  r.duration_s = j.at("duration_s").get<double>();
  r.timed_out = j.at("timed_out").get<bool>();
  r.network_isolated = j.value("network_isolated", false);
  r.truncated = j.value("truncated", false);
  r.stdout_text = j.value("stdout", "");
  r.stderr_text = j.value("stderr", "");
  return r;
}

ParsedResult parse_result(std::string_view stdout_text, bool lenient) {
  static const std::regex line_re(R"(^\s*RESULT:\s*(\S+)\s*$)");
  std::optional<double> last;
  std::size_t pos = 0;
  while (pos <= stdout_text.size()) {
    auto nl = stdout_text.find('\n', pos);
    if (nl == std::string_view::npos) nl = stdout_text.size();
    const std::string line(stdout_text.substr(pos, nl - pos));
    std::smatch m;
    double v;
    if (std::regex_match(line, m, line_re) && try_parse_double(m[1].str(), v)) last = v;
    pos = nl + 1;
  }
  if (last) {
    if (!std::isfinite(*last)) return {std::nullopt, "non-finite value"};
    return {last, {}};
  }
  if (lenient) {
    static const std::regex num_re(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)");
    const std::string text(stdout_text);
    std::optional<double> found;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), num_re); it != std::sregex_iterator(); ++it) {
      double v;
      if (try_parse_double(it->str(), v) && std::isfinite(v)) found = v;
    }
    if (found) return {found, {}};
    return {std::nullopt, "no numeric token"};
  }
  return {std::nullopt, "no RESULT line"};
}

} // namespace qsage
