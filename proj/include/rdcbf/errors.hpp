#pragma once

#include <stdexcept>
#include <string>

namespace rdcbf {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a precondition (dimension mismatch, out-of-range index, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// State outside the region where a model is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Errors tied to one input channel. `channel` is 0-based.
class ChannelError : public Error {
 public:
  ChannelError(const std::string& what, int channel) : Error(what), channel_(channel) {}
  int channel() const noexcept { return channel_; }

 private:
  int channel_;
};

// |g_{v_i}(x)| below the singularity tolerance (loss of control authority).
class SingularChannel : public ChannelError {
 public:
  explicit SingularChannel(int channel)
      : ChannelError("input gain of channel " + std::to_string(channel) + " is singular", channel) {}
};

// mu_i(x) <= 0 or nu_i(x) <= 0: the admissible modified-input range no longer straddles zero.
class AssumptionViolation : public ChannelError {
 public:
  AssumptionViolation(int channel, double mu, double nu)
      : ChannelError("admissible range of channel " + std::to_string(channel) +
                         " does not contain zero (mu=" + std::to_string(mu) +
                         ", nu=" + std::to_string(nu) + ")",
                     channel),
        mu_(mu),
        nu_(nu) {}
  double mu() const noexcept { return mu_; }
  double nu() const noexcept { return nu_; }

 private:
  double mu_, nu_;
};

// epsilon >= 4 mu_i nu_i: the smoothed input cap is no longer positive.
class EpsilonTooLarge : public ChannelError {
 public:
  EpsilonTooLarge(int channel, double epsilon, double bound)
      : ChannelError("smoothing epsilon " + std::to_string(epsilon) + " >= 4*mu*nu = " +
                         std::to_string(bound) + " on channel " + std::to_string(channel),
                     channel) {}
};

// An error raised while integrating the evading flow, tagged with the time it happened.
class RolloutError : public Error {
 public:
  RolloutError(const std::string& what, double time, int channel)
      : Error(what + " (at t=" + std::to_string(time) + ")"), time_(time), channel_(channel) {}
  double time() const noexcept { return time_; }
  // -1 when the underlying failure is not channel specific.
  int channel() const noexcept { return channel_; }

 private:
  double time_;
  int channel_;
};

}  // namespace rdcbf
