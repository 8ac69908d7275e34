#pragma once

#include <stdexcept>
#include <string>

namespace ssoprobe::openid {

class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DhError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingSignedField : public std::runtime_error {
 public:
  explicit MissingSignedField(std::string field)
      : std::runtime_error("signed field missing from token: " + field), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace ssoprobe::openid
