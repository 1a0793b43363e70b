#include "notana/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <thread>

#include <fmt/format.h>

#include "fsutil.hpp"
#include "notana/digest.hpp"
#include "notana/error.hpp"

namespace notana {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kSnapshotSeparator = '~';
constexpr auto kLockTimeout = std::chrono::seconds(10);

class FileLock {
 public:
  FileLock(const fs::path& path, bool exclusive) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      throw Error(Errc::SerializationError, "cannot open lock file " + path.string() + ": " + std::strerror(errno));
    }
    const int op = (exclusive ? LOCK_EX : LOCK_SH) | LOCK_NB;
    const auto deadline = std::chrono::steady_clock::now() + kLockTimeout;
    while (::flock(fd_, op) != 0) {
      if (errno != EWOULDBLOCK && errno != EINTR) {
        ::close(fd_);
        throw Error(Errc::SerializationError, "flock failed: " + std::string(std::strerror(errno)));
      }
      if (std::chrono::steady_clock::now() >= deadline) {
        ::close(fd_);
        throw Error(Errc::LockHeld, "workspace is locked by another writer", {{"lock", path.string()}});
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::pair<std::string, std::uint64_t> split_snapshot_id(std::string_view snapshot_id) {
  const auto pos = snapshot_id.rfind(kSnapshotSeparator);
  if (pos == std::string_view::npos || pos == 0 || pos + 1 == snapshot_id.size()) {
    throw Error(Errc::NotFound, "malformed snapshot id '" + std::string(snapshot_id) + "'");
  }
  const std::string seq_text(snapshot_id.substr(pos + 1));
  if (!std::all_of(seq_text.begin(), seq_text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw Error(Errc::NotFound, "malformed snapshot id '" + std::string(snapshot_id) + "'");
  }
  return {std::string(snapshot_id.substr(0, pos)), std::stoull(seq_text)};
}

std::string seq_name(std::uint64_t seq) { return fmt::format("{:06}", seq); }

SnapshotMeta meta_from_json(const json& j) {
  try {
    return {j.at("snapshot_id").get<std::string>(), j.at("workspace_id").get<std::string>(),
            j.at("taken_at").get<std::string>(), j.at("digest").get<std::string>(),
            j.at("size").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw Error(Errc::IntegrityError, std::string("malformed snapshot metadata: ") + e.what());
  }
}

std::vector<std::uint64_t> snapshot_seqs(const fs::path& dir) {
  std::vector<std::uint64_t> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    const auto stem = entry.path().stem().string();
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    out.push_back(std::stoull(stem));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json to_json(const SnapshotMeta& m) {
  return {{"snapshot_id", m.snapshot_id},
          {"workspace_id", m.workspace_id},
          {"taken_at", m.taken_at},
          {"digest", m.digest},
          {"size", m.size}};
}

void check_workspace_id(std::string_view id) {
  const bool ok = !id.empty() && id.size() <= 64 && id.front() != '.' &&
                  std::all_of(id.begin(), id.end(), [](char c) {
                    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                           c == '_' || c == '.';
                  });
  if (!ok) throw Error(Errc::InvalidArgument, "invalid workspace id '" + std::string(id) + "'");
}

WorkspaceStore::WorkspaceStore(fs::path root, Clock clock) : root_(std::move(root)), clock_(std::move(clock)) {
  if (!clock_) clock_ = utc_now;
  fs::create_directories(root_);
}

fs::path WorkspaceStore::workspace_dir(std::string_view id) const {
  check_workspace_id(id);
  return root_ / std::string(id);
}

Workspace WorkspaceStore::create(std::optional<Raster> base_image, int width, int height) {
  std::lock_guard guard(create_mutex_);
  for (int n = 1;; ++n) {
    const std::string id = fmt::format("w{:06}", n);
    // create_directory is atomic: false means another process owns the id.
    if (!fs::create_directory(root_ / id)) continue;
    Workspace ws = base_image ? Workspace::blank(id, base_image->width(), base_image->height(), clock_())
                              : Workspace::blank(id, width, height, clock_());
    if (base_image) ws.drawing_layer = std::move(*base_image);
    put(ws);
    return ws;
  }
}

bool WorkspaceStore::exists(std::string_view id) const {
  std::error_code ec;
  return fs::is_regular_file(workspace_dir(id) / "manifest.json", ec);
}

std::vector<std::string> WorkspaceStore::list() const {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::is_regular_file(entry.path() / "manifest.json")) {
      out.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_workspace_files(const Workspace& ws, const fs::path& dir) {
  fs::create_directories(dir / "frames");
  detail::write_file_atomic(dir / "drawing.png", encode_png(ws.drawing_layer));
  detail::write_file_atomic(dir / "notation.png", encode_png(ws.notation_layer));
  for (const auto& f : ws.frames) {
    const fs::path file = dir / "frames" / (std::to_string(f.index) + ".png");
    if (f.image) {
      detail::write_file_atomic(file, encode_png(*f.image));
    } else {
      fs::remove(file);
    }
  }
  for (const auto& entry : fs::directory_iterator(dir / "frames")) {
    const auto stem = entry.path().stem().string();
    const bool numeric = !stem.empty() && std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (numeric && std::stoull(stem) >= ws.frames.size()) fs::remove(entry.path());
  }
  // Manifest last, so a reader never sees it ahead of the rasters it names.
  detail::write_file_atomic(dir / "manifest.json", manifest_text(ws));
}

void WorkspaceStore::put(const Workspace& ws) {
  validate(ws);
  const fs::path dir = workspace_dir(ws.id);
  fs::create_directories(dir);
  FileLock lock(dir / ".lock", true);
  write_workspace_files(ws, dir);
}

Workspace WorkspaceStore::get(std::string_view id) const {
  const fs::path dir = workspace_dir(id);
  if (!fs::is_regular_file(dir / "manifest.json")) {
    throw Error(Errc::NotFound, "no workspace '" + std::string(id) + "'", {{"workspace_id", std::string(id)}});
  }
  FileLock lock(dir / ".lock", false);
  const json m = json::parse(detail::read_file(dir / "manifest.json"), nullptr, false);
  if (m.is_discarded()) throw Error(Errc::SerializationError, "manifest.json is not valid JSON");
  try {
    Workspace ws;
    ws.id = m.at("id").get<std::string>();
    ws.created_at = m.at("created_at").get<std::string>();
    ws.modified_at = m.at("modified_at").get<std::string>();
    ws.drawing_layer = read_png(dir / m.at("drawing").get<std::string>());
    ws.notation_layer = read_png(dir / m.at("notation").get<std::string>());
    if (!m.at("interpretation").is_null()) ws.interpretation = interpretation_from_json(m["interpretation"]);
    if (!m.at("timeline").is_null()) ws.timeline = timeline_from_json(m["timeline"]);
    for (const auto& fj : m.at("frames")) {
      FrameRecord r = frame_record_from_json(fj);
      if (fj.contains("file")) r.image = read_png(dir / fj["file"].get<std::string>());
      ws.frames.push_back(std::move(r));
    }
    const json& b = m.at("brush");
    ws.brush.mode = b.at("mode").get<std::string>() == "notation" ? BrushMode::notation : BrushMode::drawing;
    ws.brush.size = b.at("size").get<double>();
    ws.brush.color = b.at("color").get<std::string>();
    ws.generate_with_notations = m.at("generate_with_notations").get<bool>();
    return ws;
  } catch (const json::exception& e) {
    throw Error(Errc::SerializationError, std::string("malformed manifest: ") + e.what());
  }
}

SnapshotMeta WorkspaceStore::save(const Workspace& ws) {
  validate(ws);
  const fs::path dir = workspace_dir(ws.id);
  const fs::path history = dir / "history";
  fs::create_directories(history / "snapshots");
  FileLock lock(dir / ".lock", true);

  const std::string bytes = serialize_workspace(ws);
  SnapshotMeta meta;
  meta.workspace_id = ws.id;
  meta.digest = sha256_hex(bytes);
  meta.size = bytes.size();
  meta.taken_at = clock_();
  const auto seqs = snapshot_seqs(history / "snapshots");
  const std::uint64_t seq = seqs.empty() ? 1 : seqs.back() + 1;
  meta.snapshot_id = ws.id + kSnapshotSeparator + seq_name(seq);

  const fs::path snap = history / (meta.digest + ".snap");
  // Content-addressed: an existing file with this name already holds these bytes.
  if (!fs::exists(snap)) detail::write_file_atomic(snap, bytes);
  detail::write_file_atomic(history / "snapshots" / (seq_name(seq) + ".json"), to_json(meta).dump(2) + "\n");
  return meta;
}

SnapshotMeta WorkspaceStore::snapshot_meta(std::string_view snapshot_id) const {
  const auto [ws_id, seq] = split_snapshot_id(snapshot_id);
  const fs::path file = workspace_dir(ws_id) / "history" / "snapshots" / (seq_name(seq) + ".json");
  std::error_code ec;
  if (!fs::is_regular_file(file, ec)) {
    throw Error(Errc::NotFound, "no snapshot '" + std::string(snapshot_id) + "'", {{"snapshot_id", snapshot_id}});
  }
  const json j = json::parse(detail::read_file(file), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::IntegrityError, "snapshot metadata is not valid JSON", {{"file", file.string()}});
  SnapshotMeta meta = meta_from_json(j);
  if (meta.snapshot_id != snapshot_id) {
    throw Error(Errc::IntegrityError, "snapshot metadata names a different id",
                {{"expected", snapshot_id}, {"found", meta.snapshot_id}});
  }
  return meta;
}

fs::path WorkspaceStore::snapshot_file(const SnapshotMeta& meta) const {
  return workspace_dir(meta.workspace_id) / "history" / (meta.digest + ".snap");
}

Workspace WorkspaceStore::load(std::string_view snapshot_id) const {
  const SnapshotMeta meta = snapshot_meta(snapshot_id);
  const fs::path file = snapshot_file(meta);
  std::string bytes;
  try {
    bytes = detail::read_file(file);
  } catch (const Error&) {
    throw Error(Errc::IntegrityError, "snapshot content missing", {{"file", file.string()}, {"expected", meta.digest}});
  }
  const std::string actual = sha256_hex(bytes);
  if (actual != meta.digest) {
    throw Error(Errc::IntegrityError, "snapshot digest mismatch",
                {{"snapshot_id", meta.snapshot_id}, {"expected", meta.digest}, {"actual", actual}});
  }
  return deserialize_workspace(bytes);
}

std::vector<SnapshotMeta> WorkspaceStore::list_history(std::string_view workspace_id) const {
  std::vector<SnapshotMeta> out;
  const fs::path dir = workspace_dir(workspace_id) / "history" / "snapshots";
  auto seqs = snapshot_seqs(dir);
  std::reverse(seqs.begin(), seqs.end());
  for (auto seq : seqs) out.push_back(snapshot_meta(std::string(workspace_id) + kSnapshotSeparator + seq_name(seq)));
  return out;
}

}  // namespace notana
