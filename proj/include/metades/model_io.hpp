#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "metades/des.hpp"

namespace metades {

inline constexpr int kModelFormatVersion = 1;

/// Raised for unreadable, truncated, corrupted or incompatible model files.
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-file JSON bundle: pool weights, selector, mask, scaling, f_Conf
/// bounds, hyper-parameters and the DSEL rows. Doubles are written in
/// shortest round-trip form, so a reloaded model predicts identically.
std::string serialize_model(const DesModel& model);
DesModel deserialize_model(const std::string& text);

void save_model(const DesModel& model, const std::filesystem::path& path);
DesModel load_model(const std::filesystem::path& path);

}  // namespace metades
