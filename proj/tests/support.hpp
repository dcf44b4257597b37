#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

#include "cwm/image/appearance.hpp"
#include "cwm/image/frame.hpp"
#include "cwm/perception/perceive.hpp"
#include "cwm/sim/render.hpp"
#include "cwm/sim/scenario.hpp"
#include "cwm/twin/twin.hpp"

namespace cwm::testing {

/// Loopback HTTP server for scripted backend stubs.
class StubServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit StubServer(Handler handler) {
    server_.Post("/.*", [this, handler](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      {
        std::lock_guard lock(mutex_);
        bodies_.push_back(req.body);
      }
      handler(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint(const std::string& path = "/edit") const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }
  int requests() const { return requests_; }
  std::vector<std::string> bodies() const {
    std::lock_guard lock(mutex_);
    return bodies_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  mutable std::mutex mutex_;
  std::vector<std::string> bodies_;
};

inline ScenarioSpec seeded_spec(std::uint64_t seed) {
  ScenarioSpec spec;
  spec.seed = seed;
  return spec;
}

/// Ground-truth states for frames 0..last.
inline std::vector<WorldState> seeded_states(std::uint64_t seed, int last) {
  return simulate(generate_scenario(seeded_spec(seed)), last);
}

/// No two footprints share a cell in any state.
inline bool never_overlaps(const std::vector<WorldState>& states) {
  for (const WorldState& s : states) {
    std::set<std::int64_t> seen;
    for (const SimObject& o : s.objects) {
      bool clash = false;
      for_each_footprint_cell(o.shape, o.position.x, o.position.y, o.w, o.h, s.grid(), [&](int cx, int cy) {
        clash = clash || !seen.insert(static_cast<std::int64_t>(cy) * s.width + cx).second;
      });
      if (clash) return false;
    }
  }
  return true;
}

/// Relabels a twin so ids follow color order, the labelling perception uses
/// for objects that are all visible in the first frame.
inline TwinSequence relabel_by_color(TwinSequence twin) {
  std::sort(twin.elements.begin(), twin.elements.end(), [](const ObjectTrace& a, const ObjectTrace& b) {
    return require_color(a.attributes) < require_color(b.attributes);
  });
  for (std::size_t i = 0; i < twin.elements.size(); ++i) twin.elements[i].id = static_cast<int>(i) + 1;
  finalize_twin(twin);
  return twin;
}

/// First palette color no element of the twin uses.
inline Rgb unused_color(const TwinSequence& twin) {
  for (const NamedColor& c : kPalette) {
    bool used = false;
    for (const ObjectTrace& e : twin.elements) used = used || require_color(e.attributes) == c.rgb;
    if (!used) return c.rgb;
  }
  return kPalette.back().rgb;
}

}  // namespace cwm::testing
