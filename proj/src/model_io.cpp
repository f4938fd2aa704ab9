#include "metades/model_io.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>

namespace metades {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "metades-model";

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

json perceptron_to_json(const Perceptron& p) {
  return {{"features", p.feature_count()},
          {"classes", p.class_count()},
          {"gain", p.support_gain()},
          {"trained", p.trained()},
          {"weights", p.weights()}};
}

Perceptron perceptron_from_json(const json& j) {
  return Perceptron(j.at("features").get<std::size_t>(), j.at("classes").get<std::size_t>(),
                    j.at("weights").get<std::vector<double>>(), j.at("gain").get<double>(),
                    j.at("trained").get<bool>());
}

json payload(const DesModel& model) {
  json pool = json::array();
  for (const auto& m : model.pool().members()) pool.push_back(perceptron_to_json(m));

  const auto& meta = model.meta();
  const auto& dsel = model.dsel();
  const auto& bounds = model.extractor().bounds();
  const auto& h = model.hyper();
  const auto& rrc = model.rrc();
  return {
      {"pool", pool},
      {"meta",
       {{"weights", meta.weights()},
        {"bias", meta.bias()},
        {"mean", meta.mean()},
        {"scale", meta.scale()},
        {"fingerprint", meta.mask_fingerprint()},
        {"degenerate", meta.degenerate()},
        {"iterations", meta.iterations()}}},
      {"mask", model.mask().to_string()},
      {"scale", {{"min", model.scale().min}, {"max", model.scale().max}}},
      {"bounds", {{"min", bounds.min}, {"max", bounds.max}}},
      {"hyper",
       {{"k", h.k},
        {"kp", h.kp},
        {"consensus_threshold", h.consensus_threshold},
        {"selection_threshold", h.selection_threshold}}},
      {"rrc", {{"samples", rrc.samples}, {"concentration", rrc.concentration}, {"seed", rrc.seed}}},
      {"dsel",
       {{"features", dsel.feature_count()},
        {"classes", dsel.class_count()},
        {"values", dsel.values()},
        {"labels", dsel.labels()},
        {"class_names", dsel.class_names()}}},
      {"class_names", model.class_names()},
  };
}

DesModel from_payload(const json& j) {
  std::vector<Perceptron> members;
  for (const auto& p : j.at("pool")) members.push_back(perceptron_from_json(p));
  if (members.empty()) throw ModelFormatError("model file holds an empty pool");

  const auto& jd = j.at("dsel");
  const auto d = jd.at("features").get<std::size_t>();
  Dataset dsel(d, jd.at("classes").get<std::size_t>());
  const auto values = jd.at("values").get<std::vector<double>>();
  const auto labels = jd.at("labels").get<std::vector<int>>();
  if (values.size() != labels.size() * d) throw ModelFormatError("DSEL table is inconsistent");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    dsel.add(std::span<const double>(values.data() + i * d, d), labels[i]);
  }
  dsel.set_class_names(jd.at("class_names").get<std::vector<std::string>>());

  const auto& jm = j.at("meta");
  MetaClassifier meta(jm.at("weights").get<std::vector<double>>(), jm.at("bias").get<double>(),
                      jm.at("mean").get<std::vector<double>>(),
                      jm.at("scale").get<std::vector<double>>(),
                      jm.at("fingerprint").get<std::string>(), jm.at("degenerate").get<bool>(),
                      jm.at("iterations").get<std::size_t>());

  ScaleParams scale{j.at("scale").at("min").get<std::vector<double>>(),
                    j.at("scale").at("max").get<std::vector<double>>()};
  ConfidenceBounds bounds{j.at("bounds").at("min").get<std::vector<double>>(),
                          j.at("bounds").at("max").get<std::vector<double>>()};
  const auto& jh = j.at("hyper");
  DesHyperParams hyper{jh.at("k").get<std::size_t>(), jh.at("kp").get<std::size_t>(),
                       jh.at("consensus_threshold").get<double>(),
                       jh.at("selection_threshold").get<double>()};
  const auto& jr = j.at("rrc");
  RrcConfig rrc{jr.at("samples").get<std::size_t>(), jr.at("concentration").get<double>(),
                jr.at("seed").get<std::uint64_t>()};

  DesModel model(ClassifierPool(std::move(members)), std::move(dsel), std::move(scale),
                 std::move(bounds), FeatureMask::parse(j.at("mask").get<std::string>()),
                 std::move(meta), hyper, rrc);
  model.set_class_names(j.at("class_names").get<std::vector<std::string>>());
  return model;
}

}  // namespace

std::string serialize_model(const DesModel& model) {
  const auto body = payload(model).dump();
  json doc = {{"format", kFormatName},
              {"version", kModelFormatVersion},
              {"checksum", fnv1a(body)},
              {"model", json::parse(body)}};
  return doc.dump() + "\n";
}

DesModel deserialize_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelFormatError(std::string("model file is truncated or not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kFormatName) {
    throw ModelFormatError("not a metades model file");
  }
  const auto version = doc.value("version", -1);
  if (version != kModelFormatVersion) {
    throw ModelFormatError("incompatible model format version " + std::to_string(version) +
                           " (this build reads version " + std::to_string(kModelFormatVersion) +
                           ")");
  }
  if (!doc.contains("model") || !doc.contains("checksum")) {
    throw ModelFormatError("model file is missing its payload or checksum");
  }
  if (fnv1a(doc["model"].dump()) != doc["checksum"].get<std::string>()) {
    throw ModelFormatError("model file is corrupted (checksum mismatch)");
  }
  try {
    return from_payload(doc["model"]);
  } catch (const ModelFormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw ModelFormatError(std::string("model file is malformed: ") + e.what());
  }
}

void save_model(const DesModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out << serialize_model(model);
  if (!out) throw std::runtime_error("failed writing model file " + path.string());
}

DesModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace metades
