#include "notana/generation.hpp"

#include <algorithm>

#include "notana/backend.hpp"
#include "notana/digest.hpp"

namespace notana {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<FrameStatus, std::string_view>, 4> kStatuses{{
    {FrameStatus::pending, "pending"},
    {FrameStatus::generating, "generating"},
    {FrameStatus::done, "done"},
    {FrameStatus::failed, "failed"},
}};

Error frame_error(const Error& e, int index) {
  json details = e.details().is_object() ? e.details() : json::object();
  details["index"] = index;
  return Error(e.code(), e.message(), details);
}

void notify(const GenerationHooks& hooks, const std::vector<FrameRecord>& records) {
  if (hooks.on_update) hooks.on_update(records);
}

const Raster& input_for(const Raster& base, const std::vector<FrameRecord>& records, int index) {
  if (index == 0) return base;
  const FrameRecord& parent = records[static_cast<std::size_t>(index - 1)];
  if (parent.status != FrameStatus::done || !parent.image) {
    throw Error(Errc::ParentNotReady, "frame " + parent.frame_id + " is not done", {{"index", index}});
  }
  return *parent.image;
}

void reset(FrameRecord& r) {
  r.status = FrameStatus::pending;
  r.image.reset();
  r.error.reset();
}

// Runs frames [first, end) in order.
GenerationOutcome run_from(const Raster& base, std::vector<FrameRecord> records, std::size_t first,
                           ImageBackend& backend, const GenerationHooks& hooks) {
  GenerationOutcome outcome;
  for (std::size_t i = first; i < records.size(); ++i) {
    if (hooks.stop.stop_requested()) {
      outcome.error = Error(Errc::Cancelled, "generation cancelled before frame " + records[i].frame_id,
                            {{"index", static_cast<int>(i)}});
      break;
    }
    FrameRecord& r = records[i];
    r.status = FrameStatus::generating;
    r.error.reset();
    notify(hooks, records);
    try {
      const Raster& input = input_for(base, records, static_cast<int>(i));
      Raster image = backend.generate_image(input, r.prompt_text);
      if (image.empty()) throw Error(Errc::GenerationRejected, "backend returned an empty image");
      r.image = std::move(image);
      r.status = FrameStatus::done;
      notify(hooks, records);
    } catch (const Error& e) {
      outcome.error = frame_error(e, static_cast<int>(i));
    } catch (const std::exception& e) {
      outcome.error = Error(Errc::BackendUnavailable, e.what(), {{"index", static_cast<int>(i)}});
    }
    if (outcome.error) {
      r.status = FrameStatus::failed;
      r.image.reset();
      r.error = outcome.error->to_json();
      for (std::size_t j = i + 1; j < records.size(); ++j) reset(records[j]);
      notify(hooks, records);
      break;
    }
  }
  outcome.records = std::move(records);
  return outcome;
}

}  // namespace

std::string_view to_string(FrameStatus v) {
  for (const auto& [k, name] : kStatuses) {
    if (k == v) return name;
  }
  return "pending";
}

std::optional<FrameStatus> frame_status_from_string(std::string_view name) {
  for (const auto& [k, n] : kStatuses) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::string frame_id_for(int index) { return "f" + std::to_string(index); }

std::vector<FrameRecord> plan_frames(const std::vector<FramePrompt>& prompts) {
  std::vector<FrameRecord> records;
  records.reserve(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (prompts[i].index != static_cast<int>(i)) {
      throw Error(Errc::InvalidArgument, "prompts must be index-ordered from 0", {{"position", i}});
    }
    FrameRecord r;
    r.index = static_cast<int>(i);
    r.frame_id = frame_id_for(r.index);
    r.marker_id = prompts[i].marker_id;
    r.prompt_text = prompts[i].text;
    r.prompt_digest = sha256_hex(prompts[i].text);
    r.parent_frame_id = i == 0 ? std::string(kBaseFrameId) : frame_id_for(r.index - 1);
    records.push_back(std::move(r));
  }
  return records;
}

GenerationOutcome generate_frames(const Raster& base, const std::vector<FramePrompt>& prompts, ImageBackend& backend,
                                  const GenerationHooks& hooks) {
  if (prompts.empty()) throw Error(Errc::InvalidArgument, "no frame prompts to generate");
  if (base.empty()) throw Error(Errc::InvalidArgument, "base image is empty");
  std::vector<FrameRecord> records = plan_frames(prompts);
  notify(hooks, records);
  return run_from(base, std::move(records), 0, backend, hooks);
}

GenerationOutcome resume_frames(const Raster& base, std::vector<FrameRecord> records, ImageBackend& backend,
                                const GenerationHooks& hooks) {
  if (records.empty()) throw Error(Errc::InvalidArgument, "no frames to generate");
  std::size_t first = 0;
  while (first < records.size() && records[first].status == FrameStatus::done && records[first].image) ++first;
  for (std::size_t j = first; j < records.size(); ++j) reset(records[j]);
  return run_from(base, std::move(records), first, backend, hooks);
}

std::vector<FrameRecord> regenerate_frame(const Raster& base, const std::vector<FrameRecord>& records, int index,
                                          ImageBackend& backend) {
  if (index < 0 || static_cast<std::size_t>(index) >= records.size()) {
    throw Error(Errc::InvalidArgument, "frame index out of range", {{"index", index}, {"count", records.size()}});
  }
  const Raster& input = input_for(base, records, index);
  Raster image;
  try {
    image = backend.generate_image(input, records[static_cast<std::size_t>(index)].prompt_text);
  } catch (const Error& e) {
    throw frame_error(e, index);
  }
  if (image.empty()) throw Error(Errc::GenerationRejected, "backend returned an empty image", {{"index", index}});
  std::vector<FrameRecord> out = records;
  FrameRecord& r = out[static_cast<std::size_t>(index)];
  r.image = std::move(image);
  r.status = FrameStatus::done;
  r.error.reset();
  for (std::size_t j = static_cast<std::size_t>(index) + 1; j < out.size(); ++j) reset(out[j]);
  return out;
}

Raster onion_skin(const Raster& base, const std::vector<FrameRecord>& records, std::vector<int> selected,
                  const std::optional<std::vector<double>>& ramp) {
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  if (ramp && ramp->size() != selected.size()) {
    throw Error(Errc::InvalidArgument, "opacity ramp size does not match the selection",
                {{"ramp", ramp->size()}, {"selected", selected.size()}});
  }
  Raster out = base;
  const std::size_t n = selected.size();
  for (std::size_t k = 0; k < n; ++k) {
    const int index = selected[k];
    if (index < 0 || static_cast<std::size_t>(index) >= records.size()) {
      throw Error(Errc::InvalidArgument, "no frame with index " + std::to_string(index), {{"index", index}});
    }
    const FrameRecord& r = records[static_cast<std::size_t>(index)];
    if (r.status != FrameStatus::done || !r.image) {
      throw Error(Errc::FrameNotReady, "frame " + r.frame_id + " is not done", {{"index", index}});
    }
    const double opacity = ramp ? (*ramp)[k] : static_cast<double>(k + 1) / static_cast<double>(n);
    composite_over_in_place(out, *r.image, static_cast<float>(opacity));
  }
  return out;
}

std::vector<std::string> frame_chain_violations(const std::vector<FrameRecord>& records) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const FrameRecord& r = records[i];
    const int index = static_cast<int>(i);
    if (r.index != index) out.push_back("frame at position " + std::to_string(i) + " has index " + std::to_string(r.index));
    if (r.frame_id != frame_id_for(index)) out.push_back("frame " + std::to_string(i) + " has id " + r.frame_id);
    const std::string expected_parent = i == 0 ? std::string(kBaseFrameId) : frame_id_for(index - 1);
    if (r.parent_frame_id != expected_parent) {
      out.push_back("frame " + r.frame_id + " has parent " + r.parent_frame_id + ", expected " + expected_parent);
    }
    if (r.status == FrameStatus::done && !r.image) out.push_back("frame " + r.frame_id + " is done without an image");
    if (r.status == FrameStatus::done && i > 0 && records[i - 1].status != FrameStatus::done) {
      out.push_back("frame " + r.frame_id + " is done but its parent is not");
    }
  }
  return out;
}

json to_json(const FrameRecord& r) {
  json j = {{"frame_id", r.frame_id},
            {"marker_id", r.marker_id},
            {"index", r.index},
            {"status", to_string(r.status)},
            {"prompt_digest", r.prompt_digest},
            {"prompt_text", r.prompt_text},
            {"parent_frame_id", r.parent_frame_id},
            {"has_image", r.image.has_value()}};
  if (r.error) j["error"] = *r.error;
  return j;
}

FrameRecord frame_record_from_json(const json& j) {
  try {
    FrameRecord r;
    r.frame_id = j.at("frame_id").get<std::string>();
    r.marker_id = j.at("marker_id").get<std::string>();
    r.index = j.at("index").get<int>();
    const auto status = frame_status_from_string(j.at("status").get<std::string>());
    if (!status) throw Error(Errc::SerializationError, "unknown frame status", {{"status", j.at("status")}});
    r.status = *status;
    r.prompt_digest = j.at("prompt_digest").get<std::string>();
    r.prompt_text = j.at("prompt_text").get<std::string>();
    r.parent_frame_id = j.at("parent_frame_id").get<std::string>();
    if (j.contains("error")) r.error = j["error"];
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::SerializationError, std::string("malformed frame record: ") + e.what());
  }
}

}  // namespace notana
