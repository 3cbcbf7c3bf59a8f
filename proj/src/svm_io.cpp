#include "error.hpp"
#include "json.hpp"
#include "svm.hpp"

namespace tvode::svm {

namespace {
constexpr int kFormatVersion = 1;
}

std::string to_json(const SvmModel& model) {
  nlohmann::json doc;
  doc["format"] = "tvode-svm";
  doc["version"] = kFormatVersion;
  doc["kernel"] = {{"type", model.kernel.type == KernelType::Linear ? "linear" : "rbf"},
                   {"gamma", model.kernel.gamma}};
  doc["standardize"] = model.standardize;
  doc["mean"] = model.scaler.mean;
  doc["scale"] = model.scaler.scale;
  doc["classes"] = model.classes;
  auto& machines = doc["machines"] = nlohmann::json::array();
  for (const auto& m : model.machines) {
    machines.push_back({{"positive", m.positive},
                        {"negative", m.negative},
                        {"bias", m.bias},
                        {"coef", m.coef},
                        {"upper", m.upper},
                        {"support", m.support}});
  }
  return doc.dump(1);
}

SvmModel from_json(std::string_view text) {
  SvmModel model;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != "tvode-svm")
      fail(ErrorCode::ModelFormat, "not a tvode-svm document");
    if (doc.at("version").get<int>() != kFormatVersion)
      fail(ErrorCode::ModelFormat, "unsupported model version " + doc.at("version").dump());
    const auto type = doc.at("kernel").at("type").get<std::string>();
    if (type == "linear") model.kernel.type = KernelType::Linear;
    else if (type == "rbf") model.kernel.type = KernelType::Rbf;
    else fail(ErrorCode::ModelFormat, "unknown kernel type '" + type + "'");
    model.kernel.gamma = doc.at("kernel").at("gamma").get<double>();
    model.standardize = doc.at("standardize").get<bool>();
    model.scaler.mean = doc.at("mean").get<std::vector<double>>();
    model.scaler.scale = doc.at("scale").get<std::vector<double>>();
    model.classes = doc.at("classes").get<std::vector<std::string>>();
    for (const auto& m : doc.at("machines")) {
      BinaryMachine bm;
      bm.positive = m.at("positive").get<std::size_t>();
      bm.negative = m.at("negative").get<std::size_t>();
      bm.bias = m.at("bias").get<double>();
      bm.coef = m.at("coef").get<std::vector<double>>();
      bm.upper = m.at("upper").get<std::vector<double>>();
      bm.support = m.at("support").get<FeatureRows>();
      model.machines.push_back(std::move(bm));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ModelFormat, std::string("malformed model JSON: ") + e.what());
  }

  const std::size_t d = model.scaler.mean.size();
  const std::size_t K = model.classes.size();
  if (model.scaler.scale.size() != d || K < 2 || model.machines.size() != K * (K - 1) / 2)
    fail(ErrorCode::ModelFormat, "model document is inconsistent");
  for (const auto& m : model.machines) {
    if (m.positive >= K || m.negative >= K || m.coef.size() != m.support.size() || m.upper.size() != m.coef.size())
      fail(ErrorCode::ModelFormat, "binary machine is inconsistent");
    for (const auto& sv : m.support)
      if (sv.size() != d) fail(ErrorCode::ModelFormat, "support vector dimensionality mismatch");
  }
  return model;
}

}  // namespace tvode::svm
