#pragma once

#include <stdexcept>
#include <string>

namespace embeig {

enum class Errc {
  edge_energy,                   // |E| too close to the band edges +-2
  duplicate_energy,              // the same value prescribed twice
  invalid_parameter,             // parameter outside its documented domain
  out_of_horizon,                // site index outside the constructed range
  step_too_large,                // |V|/sin(pi k) beyond the valid branch
  no_block_found,                // no averaging block length up to the cap
  resonant_block_degenerate,     // an averaging frequency sits on a period
  resonant_hypothesis_violated,  // +-E present among the background energies
  horizon_too_short,             // not enough sites to do anything
  envelope_never_fits,           // coupling cannot fit under the envelope
  insufficient_span,             // too few samples / too narrow a range
  decimated_trace,               // dense samples required but missing
  parse_error,                   // malformed config or potential file
  io_error,                      // file system failure
};

inline const char* to_string(Errc c) {
  switch (c) {
    case Errc::edge_energy: return "EdgeEnergy";
    case Errc::duplicate_energy: return "DuplicateEnergy";
    case Errc::invalid_parameter: return "InvalidParameter";
    case Errc::out_of_horizon: return "OutOfHorizon";
    case Errc::step_too_large: return "StepTooLarge";
    case Errc::no_block_found: return "NoBlockFound";
    case Errc::resonant_block_degenerate: return "ResonantBlockDegenerate";
    case Errc::resonant_hypothesis_violated: return "ResonantHypothesisViolated";
    case Errc::horizon_too_short: return "HorizonTooShort";
    case Errc::envelope_never_fits: return "EnvelopeNeverFits";
    case Errc::insufficient_span: return "InsufficientSpan";
    case Errc::decimated_trace: return "DecimatedTrace";
    case Errc::parse_error: return "ParseError";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace embeig
