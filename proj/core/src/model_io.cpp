#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spectralx/classifier.hpp"
#include "spectralx/error.hpp"

namespace spectralx {
namespace {

using json = nlohmann::json;

constexpr int kModelFormatVersion = 1;

json flat(const Matrix& m) { return std::vector<double>(m.data(), m.data() + m.size()); }
json flat(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Matrix read_matrix(const json& params, const char* key, Eigen::Index rows, Eigen::Index cols) {
  const auto values = params.at(key).get<std::vector<double>>();
  require(static_cast<Eigen::Index>(values.size()) == rows * cols, ErrorKind::kFormat,
          std::string("model parameter '") + key + "' has the wrong size");
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

Eigen::VectorXd read_vector(const json& params, const char* key, Eigen::Index size) {
  const auto values = params.at(key).get<std::vector<double>>();
  require(static_cast<Eigen::Index>(values.size()) == size, ErrorKind::kFormat,
          std::string("model parameter '") + key + "' has the wrong size");
  return Eigen::Map<const Eigen::VectorXd>(values.data(), size);
}

}  // namespace

std::string model_to_json(const Classifier& model) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = std::string(classifier_kind_name(model.kind()));
  doc["class_count"] = model.class_count();
  doc["input_length"] = model.input_length();
  json params = json::object();
  if (const auto* m = dynamic_cast<const SoftmaxClassifier*>(&model)) {
    params["weights"] = flat(m->weights());
    params["bias"] = flat(m->bias());
  } else if (const auto* m = dynamic_cast<const MlpClassifier*>(&model)) {
    params["hidden_width"] = m->hidden_width();
    params["hidden_weights"] = flat(m->hidden_weights());
    params["hidden_bias"] = flat(m->hidden_bias());
    params["output_weights"] = flat(m->output_weights());
    params["output_bias"] = flat(m->output_bias());
  } else if (const auto* m = dynamic_cast<const BandEnergyClassifier*>(&model)) {
    params["window_size"] = m->window_size();
    params["hop"] = m->hop();
    params["sharpness"] = m->sharpness();
    json regions = json::array();
    for (const auto& per_class : m->regions()) {
      json list = json::array();
      for (const BandRegion& r : per_class) list.push_back({r.frame_begin, r.frame_end, r.bin_begin, r.bin_end});
      regions.push_back(list);
    }
    params["regions"] = regions;
  } else if (const auto* m = dynamic_cast<const ExternalClassifier*>(&model)) {
    params["command"] = m->command();
  } else {
    fail(ErrorKind::kInvalidArgument, "classifier kind cannot be serialized");
  }
  doc["parameters"] = params;
  return doc.dump();
}

ClassifierHandle model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("model document is not valid JSON: ") + e.what());
  }
  try {
    require(doc.at("format_version").get<int>() == kModelFormatVersion, ErrorKind::kFormat,
            "unsupported model format_version");
    const auto kind = doc.at("kind").get<std::string>();
    const auto classes = doc.at("class_count").get<Eigen::Index>();
    const auto length = doc.at("input_length").get<Eigen::Index>();
    const json& params = doc.at("parameters");
    if (kind == "softmax") {
      return std::make_shared<SoftmaxClassifier>(read_matrix(params, "weights", classes, length),
                                                 read_vector(params, "bias", classes));
    }
    if (kind == "mlp") {
      const auto width = params.at("hidden_width").get<Eigen::Index>();
      return std::make_shared<MlpClassifier>(
          read_matrix(params, "hidden_weights", width, length), read_vector(params, "hidden_bias", width),
          read_matrix(params, "output_weights", classes, width), read_vector(params, "output_bias", classes));
    }
    if (kind == "band-rule") {
      std::vector<std::vector<BandRegion>> regions;
      for (const json& list : params.at("regions")) {
        auto& out = regions.emplace_back();
        for (const json& r : list) {
          const auto v = r.get<std::vector<std::size_t>>();
          require(v.size() == 4, ErrorKind::kFormat, "band region must have 4 entries");
          out.push_back({v[0], v[1], v[2], v[3]});
        }
      }
      return std::make_shared<BandEnergyClassifier>(std::move(regions), static_cast<std::size_t>(length),
                                                    params.at("window_size").get<std::size_t>(),
                                                    params.at("hop").get<std::size_t>(),
                                                    params.value("sharpness", 10.0));
    }
    if (kind == "external") return external_classifier(params.at("command").get<std::string>());
    fail(ErrorKind::kFormat, "unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("malformed model document: ") + e.what());
  }
}

void save_model(const Classifier& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out << model_to_json(model) << '\n';
}

ClassifierHandle load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot read model file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace spectralx
