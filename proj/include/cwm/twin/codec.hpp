#pragma once

#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>
#include <string_view>

#include "json.hpp"

#include "cwm/core/canonical.hpp"
#include "cwm/core/error.hpp"
#include "cwm/twin/twin.hpp"
#include "cwm/twin/validate.hpp"

namespace cwm {

using Json = nlohmann::json;

inline constexpr std::string_view kTwinVersion = "1";

namespace codec {

inline void require_keys(const Json& obj, const std::string& path, std::initializer_list<std::string_view> required,
                         std::initializer_list<std::string_view> optional = {}) {
  if (!obj.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected object");
  for (std::string_view key : required) {
    if (!obj.contains(std::string(key))) throw SchemaError(path + "/" + std::string(key), "missing field");
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (std::string_view k : required) known = known || k == key;
    for (std::string_view k : optional) known = known || k == key;
    if (!known) throw SchemaError(path + "/" + key, "unknown field");
  }
}

inline std::string get_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path, "expected string");
  return v.get<std::string>();
}

inline double get_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected number");
  return quantize(v.get<double>());
}

inline std::int64_t get_integer(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected integer");
  return v.get<std::int64_t>();
}

inline int get_int(const Json& v, const std::string& path) {
  const std::int64_t i = get_integer(v, path);
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
    throw SchemaError(path, "integer out of range");
  }
  return static_cast<int>(i);
}

inline const Json& get_array(const Json& v, const std::string& path, std::size_t exact = 0) {
  if (!v.is_array()) throw SchemaError(path, "expected array");
  if (exact && v.size() != exact) throw SchemaError(path, "expected " + std::to_string(exact) + " entries");
  return v;
}

inline GridSize get_grid(const Json& v, const std::string& path) {
  const Json& a = get_array(v, path, 2);
  return {get_int(a[0], path + "/0"), get_int(a[1], path + "/1")};
}

inline void check_version(const Json& doc) {
  if (get_string(doc["twin_version"], "/twin_version") != kTwinVersion) {
    throw SchemaError("/twin_version", "unsupported version");
  }
}

inline Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::kSyntax, std::string("malformed document: ") + e.what());
  }
}

inline std::string quote(const std::string& s) { return Json(s).dump(); }

class Writer {
 public:
  void raw(std::string_view s) { out_ += s; }
  void key(std::string_view k) {
    sep();
    out_ += '"';
    out_ += k;
    out_ += "\":";
    fresh_ = true;
  }
  void str(const std::string& s) {
    sep();
    out_ += quote(s);
  }
  void num(double v) {
    sep();
    out_ += format_fixed4(v);
  }
  void integer(std::int64_t v) {
    sep();
    out_ += std::to_string(v);
  }
  void open(char c) {
    sep();
    out_ += c;
    fresh_ = true;
  }
  void close(char c) {
    out_ += c;
    fresh_ = false;
  }
  std::string take() { return std::move(out_); }

 private:
  void sep() {
    if (!fresh_ && !out_.empty()) out_ += ',';
    fresh_ = false;
  }

  std::string out_;
  bool fresh_ = true;
};

inline void require_valid(const TwinSequence& twin) {
  auto violations = validate(twin);
  if (!violations.empty()) throw Error(Errc::kInvariant, "invalid twin: " + describe(violations));
}

inline void require_valid(const CondensedTwin& twin) {
  auto violations = validate(twin);
  if (!violations.empty()) throw Error(Errc::kInvariant, "invalid condensed twin: " + describe(violations));
}

}  // namespace codec

/// Canonical twin text: fixed key order, ids ascending, 4-digit floats, compact.
inline std::string serialize_twin(const TwinSequence& input) {
  codec::require_valid(input);
  TwinSequence twin = input;
  twin.sort_elements();
  codec::Writer w;
  w.open('{');
  w.key("twin_version");
  w.str(std::string(kTwinVersion));
  w.key("summary");
  w.str(twin.summary);
  w.key("spatial_summary");
  w.str(twin.spatial_summary);
  w.key("grid");
  w.open('[');
  w.integer(twin.grid.width);
  w.integer(twin.grid.height);
  w.close(']');
  w.key("frame_range");
  w.open('[');
  w.integer(twin.frame_range.first);
  w.integer(twin.frame_range.last);
  w.close(']');
  w.key("major_elements");
  w.open('[');
  for (const ObjectTrace& e : twin.elements) {
    w.open('{');
    w.key("id");
    w.integer(e.id);
    w.key("category");
    w.str(e.category);
    w.key("attributes");
    w.str(e.attributes);
    w.key("frame_captions");
    w.open('[');
    for (const auto& c : e.frame_captions) w.str(c);
    w.close(']');
    w.key("area_trace");
    w.open('[');
    for (double a : e.area_trace) w.num(a);
    w.close(']');
    w.key("depth_trace");
    w.open('[');
    for (double d : e.depth_trace) w.num(d);
    w.close(']');
    w.key("centroid_trace");
    w.open('[');
    for (const Vec2& c : e.centroid_trace) {
      w.open('[');
      w.num(c.x);
      w.num(c.y);
      w.close(']');
    }
    w.close(']');
    w.key("records");
    w.open('[');
    for (const ElementRecord& r : e.records) {
      w.open('{');
      w.key("frame");
      w.integer(r.frame);
      w.key("x");
      w.num(r.spatial.x);
      w.key("y");
      w.num(r.spatial.y);
      w.key("z");
      w.num(r.spatial.z);
      w.key("w");
      w.num(r.spatial.w);
      w.key("h");
      w.num(r.spatial.h);
      w.key("mask");
      w.open('[');
      for (const Run& run : r.mask.runs()) {
        w.open('[');
        w.integer(run.start);
        w.integer(run.length);
        w.close(']');
      }
      w.close(']');
      w.close('}');
    }
    w.close(']');
    w.close('}');
  }
  w.close(']');
  w.close('}');
  return w.take();
}

/// Reads a twin from an already-parsed JSON value (used when a twin is
/// embedded in a larger document).
/// Reads a twin document; `check` runs the invariant validator on the result.
inline TwinSequence twin_from_json(const Json& doc, bool check = true) {
  using namespace codec;
  require_keys(doc, "", {"twin_version", "summary", "spatial_summary", "grid", "frame_range", "major_elements"});
  check_version(doc);
  TwinSequence twin;
  twin.summary = get_string(doc["summary"], "/summary");
  twin.spatial_summary = get_string(doc["spatial_summary"], "/spatial_summary");
  twin.grid = get_grid(doc["grid"], "/grid");
  const Json& range = get_array(doc["frame_range"], "/frame_range", 2);
  twin.frame_range = {get_int(range[0], "/frame_range/0"), get_int(range[1], "/frame_range/1")};
  const Json& elements = get_array(doc["major_elements"], "/major_elements");
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const std::string base = "/major_elements/" + std::to_string(i);
    const Json& e = elements[i];
    require_keys(e, base,
                 {"id", "category", "attributes", "frame_captions", "area_trace", "depth_trace", "centroid_trace",
                  "records"});
    ObjectTrace trace;
    trace.id = get_int(e["id"], base + "/id");
    trace.category = get_string(e["category"], base + "/category");
    trace.attributes = get_string(e["attributes"], base + "/attributes");
    const Json& captions = get_array(e["frame_captions"], base + "/frame_captions");
    for (std::size_t j = 0; j < captions.size(); ++j) {
      trace.frame_captions.push_back(get_string(captions[j], base + "/frame_captions/" + std::to_string(j)));
    }
    const Json& areas = get_array(e["area_trace"], base + "/area_trace");
    for (std::size_t j = 0; j < areas.size(); ++j) {
      trace.area_trace.push_back(get_number(areas[j], base + "/area_trace/" + std::to_string(j)));
    }
    const Json& depths = get_array(e["depth_trace"], base + "/depth_trace");
    for (std::size_t j = 0; j < depths.size(); ++j) {
      trace.depth_trace.push_back(get_number(depths[j], base + "/depth_trace/" + std::to_string(j)));
    }
    const Json& centroids = get_array(e["centroid_trace"], base + "/centroid_trace");
    for (std::size_t j = 0; j < centroids.size(); ++j) {
      const std::string p = base + "/centroid_trace/" + std::to_string(j);
      const Json& c = get_array(centroids[j], p, 2);
      trace.centroid_trace.push_back({get_number(c[0], p + "/0"), get_number(c[1], p + "/1")});
    }
    const Json& records = get_array(e["records"], base + "/records");
    for (std::size_t j = 0; j < records.size(); ++j) {
      const std::string p = base + "/records/" + std::to_string(j);
      const Json& r = records[j];
      require_keys(r, p, {"frame", "x", "y", "z", "w", "h", "mask"});
      ElementRecord rec;
      rec.frame = get_int(r["frame"], p + "/frame");
      rec.spatial = {get_number(r["x"], p + "/x"), get_number(r["y"], p + "/y"), get_number(r["z"], p + "/z"),
                     get_number(r["w"], p + "/w"), get_number(r["h"], p + "/h")};
      const Json& mask = get_array(r["mask"], p + "/mask");
      std::vector<Run> runs;
      for (std::size_t m = 0; m < mask.size(); ++m) {
        const std::string mp = p + "/mask/" + std::to_string(m);
        const Json& run = get_array(mask[m], mp, 2);
        runs.push_back({get_integer(run[0], mp + "/0"), get_integer(run[1], mp + "/1")});
      }
      rec.mask = RleMask::from_runs(std::move(runs));
      trace.records.push_back(std::move(rec));
    }
    twin.elements.push_back(std::move(trace));
  }
  if (check) codec::require_valid(twin);
  twin.sort_elements();
  return twin;
}

/// SyntaxError for malformed text, SchemaError (with path) for shape problems,
/// InvariantError when the content violates twin invariants.
inline TwinSequence parse_twin(std::string_view text) { return twin_from_json(codec::parse_json(text)); }

inline std::string serialize_condensed(const CondensedTwin& input) {
  codec::require_valid(input);
  CondensedTwin twin = input;
  std::sort(twin.elements.begin(), twin.elements.end(),
            [](const CondensedElement& a, const CondensedElement& b) { return a.id < b.id; });
  codec::Writer w;
  w.open('{');
  w.key("twin_version");
  w.str(std::string(kTwinVersion));
  w.key("summary");
  w.str(twin.summary);
  w.key("spatial_summary");
  w.str(twin.spatial_summary);
  w.key("grid");
  w.open('[');
  w.integer(twin.grid.width);
  w.integer(twin.grid.height);
  w.close(']');
  w.key("elements");
  w.open('[');
  for (const CondensedElement& e : twin.elements) {
    w.open('{');
    w.key("id");
    w.integer(e.id);
    w.key("category");
    w.str(e.category);
    w.key("attributes");
    w.str(e.attributes);
    w.key("region_labels");
    w.open('[');
    for (const auto& label : e.region_labels) w.str(label);
    w.close(']');
    w.key("motion_keypoints");
    w.open('[');
    for (const MotionKeypoint& k : e.motion_keypoints) {
      w.open('[');
      w.integer(k.frame);
      w.num(k.x);
      w.num(k.y);
      w.close(']');
    }
    w.close(']');
    w.key("depth_span");
    w.open('[');
    w.num(e.depth_span.min);
    w.num(e.depth_span.max);
    w.close(']');
    w.key("area_span");
    w.open('[');
    w.num(e.area_span.min);
    w.num(e.area_span.max);
    w.close(']');
    if (e.size) {
      w.key("size");
      w.open('[');
      w.num(e.size->first);
      w.num(e.size->second);
      w.close(']');
    }
    w.close('}');
  }
  w.close(']');
  w.close('}');
  return w.take();
}

inline CondensedTwin condensed_from_json(const Json& doc, bool check = true) {
  using namespace codec;
  require_keys(doc, "", {"twin_version", "summary", "spatial_summary", "grid", "elements"});
  check_version(doc);
  CondensedTwin twin;
  twin.summary = get_string(doc["summary"], "/summary");
  twin.spatial_summary = get_string(doc["spatial_summary"], "/spatial_summary");
  twin.grid = get_grid(doc["grid"], "/grid");
  const Json& elements = get_array(doc["elements"], "/elements");
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const std::string base = "/elements/" + std::to_string(i);
    const Json& e = elements[i];
    require_keys(e, base, {"id", "category", "attributes", "region_labels", "motion_keypoints", "depth_span", "area_span"},
                 {"size"});
    CondensedElement out;
    out.id = get_int(e["id"], base + "/id");
    out.category = get_string(e["category"], base + "/category");
    out.attributes = get_string(e["attributes"], base + "/attributes");
    const Json& labels = get_array(e["region_labels"], base + "/region_labels");
    for (std::size_t j = 0; j < labels.size(); ++j) {
      out.region_labels.push_back(get_string(labels[j], base + "/region_labels/" + std::to_string(j)));
    }
    const Json& keys = get_array(e["motion_keypoints"], base + "/motion_keypoints");
    for (std::size_t j = 0; j < keys.size(); ++j) {
      const std::string p = base + "/motion_keypoints/" + std::to_string(j);
      const Json& k = get_array(keys[j], p, 3);
      out.motion_keypoints.push_back({get_int(k[0], p + "/0"), get_number(k[1], p + "/1"), get_number(k[2], p + "/2")});
    }
    const Json& depth = get_array(e["depth_span"], base + "/depth_span", 2);
    out.depth_span = {get_number(depth[0], base + "/depth_span/0"), get_number(depth[1], base + "/depth_span/1")};
    const Json& area = get_array(e["area_span"], base + "/area_span", 2);
    out.area_span = {get_number(area[0], base + "/area_span/0"), get_number(area[1], base + "/area_span/1")};
    if (e.contains("size")) {
      const Json& size = get_array(e["size"], base + "/size", 2);
      out.size = std::make_pair(get_number(size[0], base + "/size/0"), get_number(size[1], base + "/size/1"));
    }
    twin.elements.push_back(std::move(out));
  }
  if (check) codec::require_valid(twin);
  std::sort(twin.elements.begin(), twin.elements.end(),
            [](const CondensedElement& a, const CondensedElement& b) { return a.id < b.id; });
  return twin;
}

inline CondensedTwin parse_condensed(std::string_view text) { return condensed_from_json(codec::parse_json(text)); }

}  // namespace cwm
