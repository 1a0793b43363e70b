#pragma once

#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "notana/workspace.hpp"

// On-disk workspaces: <root>/<id>/{manifest.json, drawing.png, notation.png,
// frames/<index>.png, history/<digest>.snap, history/snapshots/<seq>.json}.
// Writers take an exclusive flock on <id>/.lock; readers take a shared one.
namespace notana {

using Clock = std::function<std::string()>;

// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_now();

struct SnapshotMeta {
  std::string snapshot_id;  // "<workspace_id>~<seq>"
  std::string workspace_id;
  std::string taken_at;
  std::string digest;  // hex SHA-256 of the .snap file
  std::uint64_t size = 0;
  friend bool operator==(const SnapshotMeta&, const SnapshotMeta&) = default;
};

nlohmann::json to_json(const SnapshotMeta& meta);

class WorkspaceStore {
 public:
  explicit WorkspaceStore(std::filesystem::path root, Clock clock = {});

  const std::filesystem::path& root() const noexcept { return root_; }
  std::string now() const { return clock_(); }

  // Allocates the next free id ("w000001", ...) and persists a blank workspace,
  // or one whose drawing layer is `base_image`.
  Workspace create(std::optional<Raster> base_image = std::nullopt, int width = kDefaultCanvasPx,
                   int height = kDefaultCanvasPx);

  bool exists(std::string_view id) const;
  std::vector<std::string> list() const;

  // Validates and writes the live state. Throws the validation errors,
  // StorageFull, SerializationError, LockHeld.
  void put(const Workspace& ws);
  // Throws NotFound, SerializationError.
  Workspace get(std::string_view id) const;

  // Appends an immutable history snapshot of `ws`. Identical content shares
  // one .snap file, so saving twice yields two entries with equal digests.
  SnapshotMeta save(const Workspace& ws);
  // Verifies the digest before parsing. Throws NotFound, IntegrityError.
  Workspace load(std::string_view snapshot_id) const;
  // Newest first; empty for a workspace without history.
  std::vector<SnapshotMeta> list_history(std::string_view workspace_id) const;

  std::filesystem::path workspace_dir(std::string_view id) const;
  std::filesystem::path snapshot_file(const SnapshotMeta& meta) const;
  // Throws NotFound.
  SnapshotMeta snapshot_meta(std::string_view snapshot_id) const;

 private:
  std::filesystem::path root_;
  Clock clock_;
  std::mutex create_mutex_;
};

// Writes manifest.json, drawing.png, notation.png and frames/<index>.png into
// `dir` without locking or validation.
void write_workspace_files(const Workspace& ws, const std::filesystem::path& dir);

// Rejects ids that could escape the store root. Throws InvalidArgument.
void check_workspace_id(std::string_view id);

}  // namespace notana
