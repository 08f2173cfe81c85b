#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace koopgram {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-Hurwitz matrix handed to a routine that needs a stable spectrum.
class SpectrumError : public Error {
 public:
  SpectrumError(const std::string& what, double re, double im)
      : Error(what), re_(re), im_(im) {}
  double real() const noexcept { return re_; }
  double imag() const noexcept { return im_; }

 private:
  double re_;
  double im_;
};

class StiffnessError : public Error {
 public:
  StiffnessError(const std::string& what, double t) : Error(what), t_(t) {}
  double time() const noexcept { return t_; }

 private:
  double t_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public Error {
 public:
  using Error::Error;
};

class MinimalityError : public Error {
 public:
  MinimalityError(const std::string& what, int deficient)
      : Error(what), deficient_(deficient) {}
  int deficient_dimension() const noexcept { return deficient_; }

 private:
  int deficient_;
};

// Radicand of the norm-preserving lifting went negative: the gain bounds
// used to size Sigma were too small at the witness point.
class SlackViolation : public Error {
 public:
  SlackViolation(const std::string& what, std::vector<double> x,
                 std::vector<double> u, double radicand)
      : Error(what), x_(std::move(x)), u_(std::move(u)), radicand_(radicand) {}
  const std::vector<double>& witness_x() const noexcept { return x_; }
  const std::vector<double>& witness_u() const noexcept { return u_; }
  double radicand() const noexcept { return radicand_; }

 private:
  std::vector<double> x_;
  std::vector<double> u_;
  double radicand_;
};

// Missing or malformed stage artifact.
class ArtifactError : public Error {
 public:
  ArtifactError(const std::string& what, std::string stage)
      : Error(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace koopgram
