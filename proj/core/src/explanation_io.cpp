#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "spectralx/error.hpp"
#include "spectralx/explainers.hpp"

namespace spectralx {

using json = nlohmann::json;

std::string explanation_to_json(const Explanation& e) {
  json doc;
  doc["method"] = std::string(method_name(e.method));
  doc["target_class"] = e.target_class;
  json space;
  const bool tf = e.space.domain() == FeatureDomain::kTimeFrequency;
  if (tf) {
    space = {{"kind", "tf"}, {"M", e.space.frames()}, {"K", e.space.bins()}};
  } else {
    space = {{"kind", "time"},
             {"segments", e.space.feature_count()},
             {"segment_length", e.space.segment_length()},
             {"signal_length", e.space.signal_length()}};
  }
  doc["space"] = space;
  json ranked = json::array();
  for (const RankedFeature& r : e.ranked) {
    json item;
    if (tf) {
      const TfCell c = e.space.cell(r.feature);
      item["feature"] = {c.frame, c.bin};
    } else {
      item["segment"] = r.feature;
    }
    // NaN has no JSON spelling; it is written as null.
    item["score"] = std::isfinite(r.score) ? json(r.score) : json(nullptr);
    ranked.push_back(item);
  }
  doc["ranked"] = ranked;
  doc["config"] = e.config;
  doc["seed"] = e.seed;
  return doc.dump(2);
}

Explanation explanation_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& ex) {
    fail(ErrorKind::kFormat, std::string("explanation is not valid JSON: ") + ex.what());
  }
  try {
    Explanation e;
    e.method = parse_method(doc.at("method").get<std::string>());
    e.target_class = doc.at("target_class").get<int>();
    const json& space = doc.at("space");
    const auto kind = space.at("kind").get<std::string>();
    if (kind == "tf") {
      e.space = FeatureSpace::time_frequency(space.at("M").get<std::size_t>(), space.at("K").get<std::size_t>());
    } else if (kind == "time") {
      e.space = FeatureSpace::time_segments(space.at("signal_length").get<std::size_t>(),
                                            space.at("segment_length").get<std::size_t>());
      require(e.space.feature_count() == space.at("segments").get<std::size_t>(), ErrorKind::kFormat,
              "segment count does not match signal and segment length");
    } else {
      fail(ErrorKind::kFormat, "unknown feature space kind '" + kind + "'");
    }
    for (const json& item : doc.at("ranked")) {
      RankedFeature r;
      if (e.space.domain() == FeatureDomain::kTimeFrequency) {
        const auto cell = item.at("feature").get<std::vector<std::size_t>>();
        require(cell.size() == 2 && cell[0] < e.space.frames() && cell[1] < e.space.bins(), ErrorKind::kFormat,
                "ranked cell outside the feature space");
        r.feature = e.space.feature({cell[0], cell[1]});
      } else {
        r.feature = item.at("segment").get<std::size_t>();
        require(r.feature < e.space.feature_count(), ErrorKind::kFormat, "ranked segment outside the feature space");
      }
      const json& score = item.at("score");
      r.score = score.is_null() ? std::numeric_limits<double>::quiet_NaN() : score.get<double>();
      e.ranked.push_back(r);
    }
    e.config = doc.at("config").get<std::map<std::string, double>>();
    e.seed = doc.at("seed").get<std::uint64_t>();
    return e;
  } catch (const json::exception& ex) {
    fail(ErrorKind::kFormat, std::string("malformed explanation: ") + ex.what());
  }
}

}  // namespace spectralx
