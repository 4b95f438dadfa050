// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/sandbox/sandbox.hpp"

#include <fcntl.h>
#include <fnmatch.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <regex>
#include <thread>

#include "vizforge/common/errors.hpp"
#include "vizforge/common/hash.hpp"
#include "vizforge/ingest/ingest.hpp"

extern char** environ;

namespace vizforge {
namespace {

using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;

EnvProfile shim_profile(std::string id, std::string module, std::string ext, milliseconds timeout) {
  EnvProfile p;
  p.profile_id = std::move(id);
  p.command = {"python3", "-m", std::move(module), "{main}", "{out_dir}"};
  p.extension = std::move(ext);
  p.timeout = timeout;
  p.capture_manifest = true;
  p.min_artifacts = 1;
  return p;
}

std::string substitute_all(std::string s, const std::map<std::string, std::string>& vars) {
  for (const auto& [key, value] : vars) {
    for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
      s.replace(pos, key.size(), value);
    }
  }
  return s;
}

class Workspace {
 public:
  explicit Workspace(const std::filesystem::path& root) {
    std::filesystem::create_directories(root);
    std::string tmpl = (root / "vizforge-ws-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw StorageError("cannot create workspace under " + root.string());
    path_ = tmpl;
  }
  ~Workspace() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() { reset(); }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }
  void reset(int fd = -1) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
  }

 private:
  int fd_ = -1;
};

bool make_pipe(Fd& read_end, Fd& write_end) {
  int p[2];
  if (::pipe2(p, O_CLOEXEC) != 0) return false;
  read_end.reset(p[0]);
  write_end.reset(p[1]);
  return true;
}

/// Keeps the last `limit` bytes of a stream without unbounded growth.
struct Tail {
  std::size_t limit;
  std::string data;
  void append(const char* p, std::size_t n) {
    data.append(p, n);
    if (data.size() > 2 * limit) data.erase(0, data.size() - limit);
  }
  std::string str() const { return tail_bytes(data, limit); }
};

ValidationResult spawn_failure(const std::string& what, Clock::time_point start) {
  ValidationResult r;
  r.passed = false;
  r.termination_reason = TerminationReason::kSpawnFailure;
  r.stderr_tail = what;
  r.duration_ms = std::chrono::duration_cast<milliseconds>(Clock::now() - start).count();
  return r;
}

std::vector<std::filesystem::path> glob_workspace(const std::filesystem::path& ws,
                                                  const std::vector<std::string>& globs) {
  std::vector<std::filesystem::path> out;
  if (globs.empty()) return out;
  std::error_code ec;
  for (auto it = std::filesystem::recursive_directory_iterator(ws, ec);
       !ec && it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    const auto rel = std::filesystem::relative(it->path(), ws).generic_string();
    if (std::any_of(globs.begin(), globs.end(), [&](const auto& g) { return glob_match(g, rel); })) {
      out.push_back(it->path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool inside(const std::filesystem::path& dir, const std::filesystem::path& p) {
  const auto d = std::filesystem::weakly_canonical(dir);
  const auto c = std::filesystem::weakly_canonical(p);
  auto [a, b] = std::mismatch(d.begin(), d.end(), c.begin(), c.end());
  return a == d.end() && c != d;
}

std::filesystem::path manifest_entry_path(const std::filesystem::path& out_dir, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : out_dir / path;
}

std::optional<int> count_after(const std::string& text, const std::regex& re) {
  std::optional<int> total;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    total = std::stoi((*it)[1].str());
  }
  return total;
}

}  // namespace

std::map<std::string, EnvProfile> default_profiles() {
  std::map<std::string, EnvProfile> m;
  auto viz = shim_profile("python-viz", "vizforge_shims.python_viz", "py", milliseconds(60'000));
  auto manim = shim_profile("manim-render", "vizforge_shims.manim_render", "py", milliseconds(300'000));
  auto web = shim_profile("web-render", "vizforge_shims.web_render", "html", milliseconds(300'000));
  web.command.insert(web.command.end(), {"--settle", "{settle_seconds}"});

  EnvProfile wolfram;
  wolfram.profile_id = "wolfram-eval";
  wolfram.command = {"wolframscript", "-file", "{main}"};
  wolfram.extension = "wl";
  wolfram.timeout = milliseconds(300'000);
  // Engine messages look like Symbol::tag; failed evaluations print $Failed.
  wolfram.error_patterns = {R"([A-Za-z$][A-Za-z0-9$]*::[A-Za-z][A-Za-z0-9]*)", R"(\$Failed)", R"(\$Aborted)"};

  EnvProfile tests;
  tests.profile_id = "test-runner";
  tests.command = {"python3", "{main}"};
  tests.extension = "py";
  tests.timeout = milliseconds(60'000);
  tests.tests = true;

  EnvProfile none;
  none.profile_id = std::string(kNoProfile);

  for (auto* p : {&viz, &manim, &web, &wolfram, &tests, &none}) m.emplace(p->profile_id, std::move(*p));
  return m;
}

std::map<std::string, EnvProfile> profiles_from_json(const Json& j) {
  auto profiles = default_profiles();
  if (j.is_null()) return profiles;
  if (!j.is_object()) throw ConfigError({"profiles (not an object)"});
  std::vector<std::string> bad;
  for (const auto& [id, pj] : j.items()) {
    const std::string base = "profiles." + id;
    if (id == kNoProfile) {
      bad.push_back(base + " (reserved: performs no execution)");
      continue;
    }
    if (!pj.is_object()) {
      bad.push_back(base + " (not an object)");
      continue;
    }
    EnvProfile p = profiles.count(id) != 0 ? profiles.at(id) : EnvProfile{};
    p.profile_id = id;
    auto seconds = [&](const Json& v, const std::string& key, bool allow_zero) -> std::optional<milliseconds> {
      if (!v.is_number() || v.get<double>() < 0 || (!allow_zero && v.get<double>() == 0)) {
        bad.push_back(key);
        return std::nullopt;
      }
      return milliseconds(static_cast<std::int64_t>(v.get<double>() * 1000));
    };
    auto strings = [&](const Json& v, const std::string& key) -> std::optional<std::vector<std::string>> {
      if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const Json& s) { return s.is_string(); })) {
        bad.push_back(key + " (expected a list of strings)");
        return std::nullopt;
      }
      return v.get<std::vector<std::string>>();
    };
    for (const auto& [k, v] : pj.items()) {
      const std::string key = base + "." + k;
      if (k == "command") {
        if (auto s = strings(v, key)) p.command = *s;
      } else if (k == "extension") {
        if (!v.is_string() || v.get<std::string>().empty()) bad.push_back(key);
        else p.extension = v.get<std::string>();
      } else if (k == "timeout") {
        if (auto t = seconds(v, key + " (must be > 0)", false)) p.timeout = *t;
      } else if (k == "grace") {
        if (auto t = seconds(v, key, true)) p.grace = *t;
      } else if (k == "memory_mb") {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad.push_back(key);
        else p.memory_bytes = v.get<std::uint64_t>() << 20;
      } else if (k == "cpu_seconds") {
        if (!v.is_number_integer() || v.get<int>() < 1) bad.push_back(key);
        else p.cpu_seconds = v.get<int>();
      } else if (k == "artifact_globs") {
        if (auto s = strings(v, key)) p.artifact_globs = *s;
      } else if (k == "min_artifacts") {
        if (!v.is_number_integer() || v.get<int>() < 0) bad.push_back(key);
        else p.min_artifacts = v.get<int>();
      } else if (k == "capture_manifest") {
        if (!v.is_boolean()) bad.push_back(key);
        else p.capture_manifest = v.get<bool>();
      } else if (k == "error_patterns") {
        if (auto s = strings(v, key)) {
          for (const auto& re : *s) {
            try {
              std::regex r(re);
            } catch (const std::regex_error&) {
              bad.push_back(key + " (invalid regex " + re + ")");
            }
          }
          p.error_patterns = *s;
        }
      } else if (k == "tests") {
        if (!v.is_boolean()) bad.push_back(key);
        else p.tests = v.get<bool>();
      } else if (k == "settle_seconds") {
        if (!v.is_number_integer() || v.get<int>() < 0) bad.push_back(key);
        else p.settle_seconds = v.get<int>();
      } else if (k == "env" || k == "resource_files") {
        if (!v.is_object() || !std::all_of(v.begin(), v.end(), [](const Json& s) { return s.is_string(); })) {
          bad.push_back(key + " (expected an object of strings)");
        } else {
          (k == "env" ? p.env : p.resource_files) = v.get<std::map<std::string, std::string>>();
        }
      } else {
        bad.push_back(key + " (unknown key)");
      }
    }
    if (p.command.empty()) bad.push_back(base + ".command (missing)");
    profiles[id] = std::move(p);
  }
  if (!bad.empty()) throw ConfigError(std::move(bad));
  return profiles;
}

CaptureManifest parse_capture_manifest(const Json& j) {
  if (!j.is_object()) throw MalformedItemError("capture manifest: not an object");
  CaptureManifest m;
  const auto produced = j.find("produced");
  if (produced == j.end() || !produced->is_array()) throw MalformedItemError("capture manifest: 'produced' missing");
  for (const auto& e : *produced) {
    if (!e.is_object() || !e.contains("path") || !e["path"].is_string() || !e.contains("media_kind") ||
        !e["media_kind"].is_string()) {
      throw MalformedItemError("capture manifest: bad produced entry " + e.dump());
    }
    const auto kind = parse_media_kind(e["media_kind"].get<std::string>());
    if (!kind) throw MalformedItemError("capture manifest: unknown media_kind " + e["media_kind"].dump());
    m.produced.push_back({e["path"].get<std::string>(), *kind});
  }
  if (auto err = j.find("error"); err != j.end() && !err->is_null()) {
    if (!err->is_string()) throw MalformedItemError("capture manifest: 'error' is not text");
    m.error = err->get<std::string>();
  }
  const auto wall = j.find("wall_time");
  if (wall == j.end() || !wall->is_number() || wall->get<double>() < 0) {
    throw MalformedItemError("capture manifest: 'wall_time' missing or negative");
  }
  m.wall_time = wall->get<double>();
  return m;
}

Json to_json(const CaptureManifest& m) {
  Json produced = Json::array();
  for (const auto& f : m.produced) produced.push_back({{"path", f.path}, {"media_kind", to_string(f.media_kind)}});
  Json j = {{"produced", produced}, {"wall_time", m.wall_time}};
  if (m.error) j["error"] = *m.error;
  return j;
}

std::vector<std::string> check_capture_manifest(const CaptureManifest& m, const std::filesystem::path& out_dir) {
  std::vector<std::string> d;
  for (const auto& f : m.produced) {
    const auto p = manifest_entry_path(out_dir, f.path);
    std::error_code ec;
    if (!inside(out_dir, p)) {
      d.push_back(f.path + ": outside the output directory");
    } else if (!std::filesystem::is_regular_file(p, ec)) {
      d.push_back(f.path + ": missing");
    } else if (std::filesystem::file_size(p, ec) == 0) {
      d.push_back(f.path + ": empty");
    }
  }
  return d;
}

bool glob_match(std::string_view pattern, std::string_view path) {
  std::string pat(pattern);
  int flags = FNM_PATHNAME;
  if (pat.find("**") != std::string::npos) {
    // fnmatch has no '**'; without FNM_PATHNAME a single '*' crosses '/'.
    for (auto pos = pat.find("**"); pos != std::string::npos; pos = pat.find("**", pos)) pat.erase(pos, 1);
    flags = 0;
  }
  return ::fnmatch(pat.c_str(), std::string(path).c_str(), flags) == 0;
}

ProcessSandbox::ProcessSandbox(CorpusStore* store, SandboxOptions options)
    : store_(store), options_(std::move(options)), slots_(std::clamp(options_.max_parallel, 1, 1024)) {}

ValidationResult ProcessSandbox::execute(const std::string& code, const EnvProfile& profile) {
  if (!profile.executes()) throw PreconditionError("profile 'none' performs no execution");
  if (profile.timeout.count() <= 0) throw PreconditionError("profile " + profile.profile_id + ": timeout must be > 0");
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};

  const auto start = Clock::now();
  Workspace ws(options_.workspace_root);
  const auto main_path = ws.path() / ("main." + profile.extension);
  const auto out_dir = ws.path() / "out";
  std::filesystem::create_directories(out_dir);
  std::filesystem::create_directories(ws.path() / "tmp");
  write_file_atomic(main_path, code);
  for (const auto& [name, content] : profile.resource_files) {
    if (!inside(ws.path(), ws.path() / name)) throw PreconditionError("resource file escapes workspace: " + name);
    std::filesystem::create_directories((ws.path() / name).parent_path());
    write_file_atomic(ws.path() / name, content);
  }

  const std::map<std::string, std::string> vars = {{"{main}", main_path.string()},
                                                   {"{workspace}", ws.path().string()},
                                                   {"{out_dir}", out_dir.string()},
                                                   {"{settle_seconds}", std::to_string(profile.settle_seconds)}};
  std::vector<std::string> args;
  for (const auto& a : profile.command) args.push_back(substitute_all(a, vars));
  if (args.empty()) return spawn_failure("profile " + profile.profile_id + " has no command", start);

  std::vector<std::string> env_strings;
  std::map<std::string, std::string> env_overrides = profile.env;
  env_overrides.emplace("HOME", ws.path().string());
  env_overrides.emplace("TMPDIR", (ws.path() / "tmp").string());
  env_overrides.emplace("VIZFORGE_OUT_DIR", out_dir.string());
  for (char** e = environ; *e != nullptr; ++e) {
    const std::string kv(*e);
    if (env_overrides.count(kv.substr(0, kv.find('='))) == 0) env_strings.push_back(kv);
  }
  for (const auto& [k, v] : env_overrides) env_strings.push_back(k + "=" + v);

  // Everything the child touches is prepared before fork.
  std::vector<char*> argv, envp;
  for (auto& s : args) argv.push_back(s.data());
  argv.push_back(nullptr);
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  const std::string ws_str = ws.path().string();

  Fd out_r, out_w, err_r, err_w, exec_r, exec_w;
  if (!make_pipe(out_r, out_w) || !make_pipe(err_r, err_w) || !make_pipe(exec_r, exec_w)) {
    return spawn_failure(std::string("pipe: ") + std::strerror(errno), start);
  }
  const int devnull = ::open("/dev/null", O_RDONLY | O_CLOEXEC);

  const pid_t pid = ::fork();
  if (pid < 0) {
    if (devnull >= 0) ::close(devnull);
    return spawn_failure(std::string("fork: ") + std::strerror(errno), start);
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::dup2(out_w.get(), STDOUT_FILENO);
    ::dup2(err_w.get(), STDERR_FILENO);
    if (profile.memory_bytes > 0) {
      const rlimit mem{profile.memory_bytes, profile.memory_bytes};
      ::setrlimit(RLIMIT_AS, &mem);
    }
    if (profile.cpu_seconds) {
      const auto cpu = static_cast<rlim_t>(*profile.cpu_seconds);
      const rlimit lim{cpu, cpu + 1};
      ::setrlimit(RLIMIT_CPU, &lim);
    }
    const rlimit no_core{0, 0};
    ::setrlimit(RLIMIT_CORE, &no_core);
    int err = 0;
    if (::chdir(ws_str.c_str()) != 0) {
      err = errno;
    } else {
      ::execvpe(argv[0], argv.data(), envp.data());
      err = errno;
    }
    [[maybe_unused]] auto n = ::write(exec_w.get(), &err, sizeof err);
    ::_exit(127);
  }
  ::setpgid(pid, pid);  // also done by the child; whichever runs first wins
  if (devnull >= 0) ::close(devnull);
  out_w.reset();
  err_w.reset();
  exec_w.reset();

  int child_errno = 0;
  ssize_t got = 0;
  do {
    got = ::read(exec_r.get(), &child_errno, sizeof child_errno);
  } while (got < 0 && errno == EINTR);
  if (got == static_cast<ssize_t>(sizeof child_errno)) {
    ::waitpid(pid, nullptr, 0);
    return spawn_failure("cannot execute " + args[0] + ": " + std::strerror(child_errno), start);
  }

  const auto term_at = start + profile.timeout;
  const auto kill_at = term_at + profile.grace;
  Tail out_tail{options_.tail_bytes, {}}, err_tail{options_.tail_bytes, {}};
  bool term_sent = false, kill_sent = false, reaped = false;
  int status = 0;
  std::optional<Clock::time_point> drain_until;
  std::vector<pollfd> fds = {{out_r.get(), POLLIN, 0}, {err_r.get(), POLLIN, 0}};
  char buf[8192];

  while (true) {
    const auto now = Clock::now();
    if (!reaped) {
      if (!term_sent && now >= term_at) {
        ::kill(-pid, SIGTERM);
        term_sent = true;
      }
      if (!kill_sent && now >= kill_at) {
        ::kill(-pid, SIGKILL);
        kill_sent = true;
      }
      const pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid) {
        reaped = true;
        // Whatever the program left behind in its group goes too.
        ::kill(-pid, SIGKILL);
        drain_until = Clock::now() + milliseconds(200);
      }
    }
    const bool open_fds = fds[0].fd >= 0 || fds[1].fd >= 0;
    if (reaped && (!open_fds || Clock::now() >= *drain_until)) break;
    if (!open_fds) {
      // Output closed early; wait for exit without spinning.
      if (!reaped) std::this_thread::sleep_for(milliseconds(5));
      continue;
    }
    int wait_ms = 20;
    if (!term_sent) {
      wait_ms = std::min<int>(wait_ms, std::max<int>(0, std::chrono::duration_cast<milliseconds>(term_at - now).count()));
    } else if (!kill_sent) {
      wait_ms = std::min<int>(wait_ms, std::max<int>(0, std::chrono::duration_cast<milliseconds>(kill_at - now).count()));
    }
    const int n = ::poll(fds.data(), fds.size(), wait_ms);
    if (n <= 0) continue;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].fd < 0 || fds[i].revents == 0) continue;
      const ssize_t r = ::read(fds[i].fd, buf, sizeof buf);
      if (r > 0) {
        (i == 0 ? out_tail : err_tail).append(buf, static_cast<std::size_t>(r));
      } else if (r == 0 || (errno != EINTR && errno != EAGAIN)) {
        fds[i].fd = -1;
      }
    }
  }

  ValidationResult res;
  res.duration_ms = std::chrono::duration_cast<milliseconds>(Clock::now() - start).count();
  res.stdout_tail = out_tail.str();
  res.stderr_tail = err_tail.str();
  if (WIFEXITED(status)) {
    res.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    res.signal = WTERMSIG(status);
  }
  if (term_sent) {
    res.termination_reason = TerminationReason::kTimeout;
  } else if (res.signal && (*res.signal == SIGXCPU || *res.signal == SIGKILL)) {
    res.termination_reason = TerminationReason::kResourceCap;
  } else {
    res.termination_reason = TerminationReason::kExit;
  }

  // Artifacts: glob matches plus whatever the capture shim declared.
  std::vector<std::pair<std::filesystem::path, MediaKind>> files;
  for (const auto& p : glob_workspace(ws.path(), profile.artifact_globs)) {
    files.emplace_back(p, media_kind_for_path(p.string()));
  }
  std::optional<std::string> gate;
  if (profile.capture_manifest && res.termination_reason == TerminationReason::kExit) {
    const auto mpath = out_dir / "manifest.json";
    try {
      const auto m = parse_capture_manifest(Json::parse(read_file(mpath)));
      if (const auto problems = check_capture_manifest(m, out_dir); !problems.empty()) {
        gate = "capture manifest: " + problems.front();
      } else {
        for (const auto& f : m.produced) {
          const auto p = manifest_entry_path(out_dir, f.path);
          if (std::none_of(files.begin(), files.end(), [&](const auto& e) { return e.first == p; })) {
            files.emplace_back(p, f.media_kind);
          }
        }
      }
      if (m.error) gate = "capture error: " + *m.error;
    } catch (const NotFoundError&) {
      gate = "no capture manifest written";
    } catch (const std::exception& e) {
      gate = std::string("unreadable capture manifest: ") + e.what();
    }
  }
  for (const auto& [path, kind] : files) {
    const auto bytes = read_file(path);
    if (bytes.empty()) continue;
    if (store_ != nullptr) {
      res.artifacts.push_back(store_->put_artifact(bytes, kind, options_.created_by));
    } else {
      res.artifacts.push_back(sha256_hex(bytes));
    }
  }

  const bool clean_exit = res.termination_reason == TerminationReason::kExit && res.exit_code == 0;
  if (clean_exit && !gate) {
    if (static_cast<int>(res.artifacts.size()) < profile.min_artifacts) {
      gate = "no artifact produced (expected at least " + std::to_string(profile.min_artifacts) + ")";
    }
  }
  if (clean_exit && !gate && !profile.error_patterns.empty()) {
    const auto text = out_tail.data + "\n" + err_tail.data;
    for (const auto& pattern : profile.error_patterns) {
      std::smatch match;
      if (std::regex_search(text, match, std::regex(pattern))) {
        gate = "engine error text: " + match.str();
        break;
      }
    }
  }
  if (profile.tests) {
    static const std::regex passed_re(R"((\d+) passed)"), failed_re(R"((\d+) failed)");
    const auto p = count_after(out_tail.data + "\n" + err_tail.data, passed_re);
    const auto f = count_after(out_tail.data + "\n" + err_tail.data, failed_re);
    if (p || f) res.test_summary = TestSummary{p.value_or(0), f.value_or(0)};
    if (clean_exit && !gate && res.test_summary && res.test_summary->failed > 0) {
      gate = std::to_string(res.test_summary->failed) + " test(s) failed";
    }
  }
  res.diagnostic = clean_exit ? gate : std::nullopt;
  res.passed = clean_exit && !gate;
  return res;
}

ValidationResult NoopExecutor::execute(const std::string& code, const EnvProfile& profile) {
  if (!profile.executes()) throw PreconditionError("profile 'none' performs no execution");
  ValidationResult r;
  r.termination_reason = TerminationReason::kExit;
  if (!fail_marker_.empty() && code.find(fail_marker_) != std::string::npos) {
    r.exit_code = 1;
    r.stderr_tail = "RuntimeError: failure marker present (" + fail_marker_ + ")";
    r.passed = false;
  } else {
    r.exit_code = 0;
    r.passed = true;
  }
  return r;
}

std::string failure_diagnostic(const ValidationResult& r, std::size_t limit) {
  std::string head;
  switch (r.termination_reason) {
    case TerminationReason::kTimeout:
      head = "timed out after " + std::to_string(r.duration_ms) + " ms";
      break;
    case TerminationReason::kResourceCap:
      head = "killed by a resource cap (signal " + std::to_string(r.signal.value_or(0)) + ")";
      break;
    case TerminationReason::kSpawnFailure:
      head = "could not start: " + r.stderr_tail;
      return tail_bytes(head, limit);
    case TerminationReason::kExit:
      if (r.exit_code) head = "exit code " + std::to_string(*r.exit_code);
      else head = "terminated by signal " + std::to_string(r.signal.value_or(0));
      break;
  }
  if (r.diagnostic) head += "; " + *r.diagnostic;
  const auto& body = r.stderr_tail.empty() ? r.stdout_tail : r.stderr_tail;
  if (body.empty()) return head;
  const auto room = limit > head.size() + 1 ? limit - head.size() - 1 : 0;
  return head + "\n" + tail_bytes(body, room);
}

RetryDecision route_failure(const SynthesisTask& task, const ValidationResult& result, int max_retries,
                            StageCounters* counters) {
  if (result.passed) throw PreconditionError("route_failure called for a passed result (task " + task.task_id + ")");
  RetryDecision d;
  if (task.attempt < max_retries) {
    d.kind = RetryDecision::Kind::kRetry;
    d.feedback = failure_diagnostic(result);
    if (counters != nullptr) ++counters->retried;
  } else {
    d.kind = RetryDecision::Kind::kDrop;
    if (counters != nullptr) ++counters->rejected;
  }
  return d;
}

}  // namespace vizforge
