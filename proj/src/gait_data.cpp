#include "biped/gait_data.hpp"

#include "biped/filter.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace biped {

void Morphology::validate() const {
  for (double l : {leg_length_right, leg_length_left}) {
    if (!std::isfinite(l) || l <= 0.3 || l >= 1.5)
      throw InvalidData("Morphology: leg length outside (0.3, 1.5) m");
  }
}

void RawTrial::validate() const {
  if (!(sample_rate > 0.0)) throw InvalidData("RawTrial: sample_rate <= 0");
  if (samples.cols() != kJointChannels)
    throw InvalidData("RawTrial: expected 6 joint channels");
  if (!samples.allFinite()) throw InvalidData("RawTrial: non-finite angles");
  const double duration = static_cast<double>(samples.rows()) / sample_rate;
  double prev = -1.0;
  for (double t : foot_strike_times) {
    if (!(t > prev)) throw InvalidData("RawTrial: strikes not increasing");
    if (t < 0.0 || t > duration)
      throw InvalidData("RawTrial: strike outside trial duration");
    prev = t;
  }
  morphology.validate();
}

void GaitCycle::validate() const {
  if (!frames.allFinite()) throw InvalidData("GaitCycle: non-finite frames");
  if (frames.cwiseAbs().maxCoeff() >= M_PI)
    throw InvalidData("GaitCycle: |angle| must stay below pi");
  morphology.validate();
}

double SpectralGait::symmetry_error() const {
  double worst = 0.0;
  for (int c = 0; c < kJointChannels; ++c) {
    for (int k = 0; k < kCycleFrames; ++k) {
      const Cplx a = coefficients(k, c);
      const Cplx b = std::conj(coefficients((kCycleFrames - k) % kCycleFrames, c));
      worst = std::max(worst, std::abs(a - b));
    }
  }
  return worst;
}

std::vector<RawCycle> segment_cycles(const RawTrial& trial) {
  trial.validate();
  std::vector<RawCycle> cycles;
  if (trial.foot_strike_times.size() < 2) return cycles;
  for (std::size_t s = 0; s + 1 < trial.foot_strike_times.size(); ++s) {
    const auto i0 = static_cast<Eigen::Index>(
        std::lround(trial.foot_strike_times[s] * trial.sample_rate));
    const auto i1 = static_cast<Eigen::Index>(
        std::lround(trial.foot_strike_times[s + 1] * trial.sample_rate));
    if (i1 > trial.samples.rows() || i1 <= i0) continue;
    const double duration =
        static_cast<double>(i1 - i0) / trial.sample_rate;
    if (duration < kMinCycleSeconds || duration > kCycleSeconds) continue;
    RawCycle c;
    c.samples = trial.samples.middleRows(i0, i1 - i0);
    c.sample_rate = trial.sample_rate;
    c.speed = trial.com_speed_label;
    c.morphology = trial.morphology;
    c.start_index = static_cast<std::size_t>(i0);
    cycles.push_back(std::move(c));
  }
  return cycles;
}

SpectralGait unify_cycle(const RawCycle& cycle) {
  if (cycle.samples.rows() < 4)
    throw InvalidData("unify_cycle: need at least 4 samples per channel");
  if (cycle.samples.cols() != kJointChannels)
    throw InvalidData("unify_cycle: expected 6 channels");
  if (!cycle.samples.allFinite())
    throw InvalidData("unify_cycle: non-finite input");
  SpectralGait out;
  out.speed = cycle.speed;
  out.morphology = cycle.morphology;
  std::vector<double> chan(static_cast<std::size_t>(cycle.samples.rows()));
  for (int c = 0; c < kJointChannels; ++c) {
    for (Eigen::Index r = 0; r < cycle.samples.rows(); ++r)
      chan[static_cast<std::size_t>(r)] = cycle.samples(r, c);
    const CVec spec = spectral_resample(dft(chan), kCycleFrames);
    for (int k = 0; k < kCycleFrames; ++k) out.coefficients(k, c) = spec[k];
  }
  return out;
}

GaitCycle reconstruct_cycle(const SpectralGait& spec, double symmetry_tol) {
  if (spec.symmetry_error() > symmetry_tol)
    throw InvalidData("reconstruct_cycle: conjugate symmetry violated");
  GaitCycle out;
  out.speed = spec.speed;
  out.morphology = spec.morphology;
  CVec chan(kCycleFrames);
  for (int c = 0; c < kJointChannels; ++c) {
    for (int k = 0; k < kCycleFrames; ++k) {
      const Cplx a = spec.coefficients(k, c);
      const Cplx b =
          std::conj(spec.coefficients((kCycleFrames - k) % kCycleFrames, c));
      chan[k] = 0.5 * (a + b);
    }
    const CVec frames = idft(chan);
    for (int k = 0; k < kCycleFrames; ++k) {
      if (std::abs(frames[k].imag()) > 1e-8)
        throw InvalidData("reconstruct_cycle: imaginary residue");
      out.frames(k, c) = frames[k].real();
    }
  }
  return out;
}

std::vector<SpectralGait> prepare_trial(const RawTrial& trial) {
  trial.validate();
  const Mat filtered =
      lowpass_filter(trial.samples, trial.sample_rate, kFilterCutoffHz);
  const int factor = std::max(
      1, static_cast<int>(std::lround(trial.sample_rate / kResampledRateHz)));
  RawTrial low = trial;
  low.samples = decimate_rows(filtered, factor);
  low.sample_rate = trial.sample_rate / factor;
  std::vector<SpectralGait> out;
  for (const RawCycle& c : segment_cycles(low)) out.push_back(unify_cycle(c));
  return out;
}

// --- corpus files ----------------------------------------------------------

namespace {

double parse_num(const std::string& tok) {
  double v = 0.0;
  const auto* b = tok.data();
  const auto* e = tok.data() + tok.size();
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    throw InvalidData("corpus: bad number '" + tok + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream ss(line);
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

std::vector<std::string> non_empty_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream ss(text);
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string cycle_corpus_csv(const std::vector<GaitCycle>& cycles) {
  std::string out = "speed,leg_r,leg_l,frame,j0,j1,j2,j3,j4,j5\n";
  for (const GaitCycle& c : cycles) {
    for (int f = 0; f < kCycleFrames; ++f) {
      out += format_double(c.speed);
      out += ',';
      out += format_double(c.morphology.leg_length_right);
      out += ',';
      out += format_double(c.morphology.leg_length_left);
      out += ',';
      out += std::to_string(f);
      for (int j = 0; j < kJointChannels; ++j) {
        out += ',';
        out += format_double(c.frames(f, j));
      }
      out += '\n';
    }
  }
  return out;
}

std::vector<GaitCycle> parse_cycle_corpus_csv(const std::string& text) {
  const auto lines = non_empty_lines(text);
  if (lines.empty() || lines[0] != "speed,leg_r,leg_l,frame,j0,j1,j2,j3,j4,j5")
    throw InvalidData("cycle corpus: bad header");
  if ((lines.size() - 1) % kCycleFrames != 0)
    throw InvalidData("cycle corpus: row count not a multiple of 32");
  std::vector<GaitCycle> cycles;
  for (std::size_t i = 1; i < lines.size(); i += kCycleFrames) {
    GaitCycle c;
    for (int f = 0; f < kCycleFrames; ++f) {
      const auto tok = split_csv_line(lines[i + static_cast<std::size_t>(f)]);
      if (tok.size() != 10) throw InvalidData("cycle corpus: bad column count");
      c.speed = parse_num(tok[0]);
      c.morphology.leg_length_right = parse_num(tok[1]);
      c.morphology.leg_length_left = parse_num(tok[2]);
      if (parse_num(tok[3]) != f)
        throw InvalidData("cycle corpus: frame index out of order");
      for (int j = 0; j < kJointChannels; ++j)
        c.frames(f, j) = parse_num(tok[4 + static_cast<std::size_t>(j)]);
    }
    c.validate();
    cycles.push_back(std::move(c));
  }
  return cycles;
}

void write_cycle_corpus(const std::string& path,
                        const std::vector<GaitCycle>& cycles) {
  write_text_file(path, cycle_corpus_csv(cycles));
}

std::vector<GaitCycle> read_cycle_corpus(const std::string& path) {
  return parse_cycle_corpus_csv(read_text_file(path));
}

std::string spectral_corpus_csv(const std::vector<SpectralGait>& specs) {
  std::string out = "speed,leg_r,leg_l,bin";
  for (int j = 0; j < kJointChannels; ++j) {
    out += ",j" + std::to_string(j) + "_re,j" + std::to_string(j) + "_im";
  }
  out += '\n';
  for (const SpectralGait& s : specs) {
    for (int k = 0; k < kCycleFrames; ++k) {
      out += format_double(s.speed);
      out += ',';
      out += format_double(s.morphology.leg_length_right);
      out += ',';
      out += format_double(s.morphology.leg_length_left);
      out += ',';
      out += std::to_string(k);
      for (int j = 0; j < kJointChannels; ++j) {
        out += ',';
        out += format_double(s.coefficients(k, j).real());
        out += ',';
        out += format_double(s.coefficients(k, j).imag());
      }
      out += '\n';
    }
  }
  return out;
}

std::vector<SpectralGait> parse_spectral_corpus_csv(const std::string& text) {
  const auto lines = non_empty_lines(text);
  std::string header = "speed,leg_r,leg_l,bin";
  for (int j = 0; j < kJointChannels; ++j)
    header += ",j" + std::to_string(j) + "_re,j" + std::to_string(j) + "_im";
  if (lines.empty() || lines[0] != header)
    throw InvalidData("spectral corpus: bad header");
  if ((lines.size() - 1) % kCycleFrames != 0)
    throw InvalidData("spectral corpus: row count not a multiple of 32");
  std::vector<SpectralGait> specs;
  for (std::size_t i = 1; i < lines.size(); i += kCycleFrames) {
    SpectralGait s;
    for (int k = 0; k < kCycleFrames; ++k) {
      const auto tok = split_csv_line(lines[i + static_cast<std::size_t>(k)]);
      if (tok.size() != 4 + 2 * kJointChannels)
        throw InvalidData("spectral corpus: bad column count");
      s.speed = parse_num(tok[0]);
      s.morphology.leg_length_right = parse_num(tok[1]);
      s.morphology.leg_length_left = parse_num(tok[2]);
      if (parse_num(tok[3]) != k)
        throw InvalidData("spectral corpus: bin index out of order");
      for (int j = 0; j < kJointChannels; ++j) {
        const double re = parse_num(tok[4 + 2 * static_cast<std::size_t>(j)]);
        const double im = parse_num(tok[5 + 2 * static_cast<std::size_t>(j)]);
        s.coefficients(k, j) = Cplx(re, im);
      }
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

void write_spectral_corpus(const std::string& path,
                           const std::vector<SpectralGait>& specs) {
  write_text_file(path, spectral_corpus_csv(specs));
}

std::vector<SpectralGait> read_spectral_corpus(const std::string& path) {
  return parse_spectral_corpus_csv(read_text_file(path));
}

}  // namespace biped
