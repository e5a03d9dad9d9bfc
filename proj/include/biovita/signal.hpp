#pragma once

// Audio feature extraction and the deterministic synthetic tri-modal corpus.
//
// The acoustic front end is a pooled log-mel pipeline: magnitude STFT with a
// Hann window, triangular mel filterbank (HTK mel scale), log with a 1e-10
// floor, then per-bin temporal mean and standard deviation concatenated into
// one fixed-length vector.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "biovita/common.hpp"
#include "biovita/taxonomy.hpp"

namespace biovita {

// ---------------------------------------------------------------------------
// Audio clips
// ---------------------------------------------------------------------------
struct AudioClip {
  std::vector<double> samples;  // mono PCM in [-1, 1]
  double sample_rate = 44100.0;
};

// Uniformly positioned contiguous window of exactly duration*rate samples;
// clips shorter than the window are zero-padded on the right.
inline AudioClip random_crop(const AudioClip& clip, double duration_s, Rng& rng) {
  if (duration_s <= 0.0) throw ValidationError("crop duration must be > 0");
  auto want = size_t(std::llround(duration_s * clip.sample_rate));
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(want, 0.0);
  if (clip.samples.size() >= want) {
    size_t start = size_t(rng.below(clip.samples.size() - want + 1));
    std::copy_n(clip.samples.begin() + long(start), want, out.samples.begin());
  } else {
    std::copy(clip.samples.begin(), clip.samples.end(), out.samples.begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// FFT (iterative radix-2) and mel filterbank
// ---------------------------------------------------------------------------
namespace dsp {

inline bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void fft_radix2(std::vector<std::complex<double>>& x) {
  const size_t n = x.size();
  if (!is_power_of_two(n)) throw ValidationError("fft size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * 3.141592653589793238462643383279502884 / double(len);
    std::complex<double> wroot(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = x[i + k];
        std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wroot;
      }
    }
  }
}

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular filters, peak 1 at each center, evaluated on the FFT bin grid.
struct MelFilterbank {
  int n_mels = 0;
  int n_bins = 0;                    // frame/2 + 1
  std::vector<double> weights;       // n_mels x n_bins, row-major
  std::vector<double> center_hz;     // filter peak frequencies

  static MelFilterbank build(int frame, double sample_rate, int n_mels, double fmin, double fmax) {
    if (n_mels < 1) throw ValidationError("n_mels must be >= 1");
    if (fmax <= fmin) throw ValidationError("fmax must exceed fmin");
    MelFilterbank fb;
    fb.n_mels = n_mels;
    fb.n_bins = frame / 2 + 1;
    fb.weights.assign(size_t(n_mels) * size_t(fb.n_bins), 0.0);
    fb.center_hz.resize(size_t(n_mels));

    const double mel_lo = hz_to_mel(fmin);
    const double mel_hi = hz_to_mel(fmax);
    std::vector<double> edges(size_t(n_mels) + 2);
    for (int i = 0; i < n_mels + 2; ++i)
      edges[size_t(i)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * double(i) / double(n_mels + 1));

    const double hz_per_bin = sample_rate / double(frame);
    for (int k = 0; k < n_mels; ++k) {
      const double lo = edges[size_t(k)];
      const double mid = edges[size_t(k) + 1];
      const double hi = edges[size_t(k) + 2];
      fb.center_hz[size_t(k)] = mid;
      for (int b = 0; b < fb.n_bins; ++b) {
        double f = double(b) * hz_per_bin;
        double w = 0.0;
        if (f > lo && f < hi) {
          w = (f <= mid) ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
        }
        fb.weights[size_t(k) * size_t(fb.n_bins) + size_t(b)] = w;
      }
    }
    return fb;
  }
};

}  // namespace dsp

struct LogMelConfig {
  int frame = 1024;
  int hop = 512;
  int n_mels = 64;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 means sample_rate / 2
};

inline constexpr double kLogFloor = 1e-10;

// Pooled log-mel features: per-mel-bin temporal mean then per-bin standard
// deviation, concatenated (dimension 2*n_mels).
inline Vec logmel_features(const AudioClip& clip, const LogMelConfig& cfg = {}) {
  if (cfg.frame < 2 || !dsp::is_power_of_two(size_t(cfg.frame)))
    throw ValidationError("frame size must be a power of two >= 2");
  if (cfg.hop < 1) throw ValidationError("hop must be >= 1");
  if (clip.samples.size() < size_t(cfg.frame))
    throw ValidationError("clip too short: " + std::to_string(clip.samples.size()) +
                          " samples < frame " + std::to_string(cfg.frame));

  const double fmax = cfg.fmax > 0.0 ? cfg.fmax : clip.sample_rate / 2.0;
  auto fb = dsp::MelFilterbank::build(cfg.frame, clip.sample_rate, cfg.n_mels, cfg.fmin, fmax);

  std::vector<double> window(size_t(cfg.frame));
  for (int n = 0; n < cfg.frame; ++n)
    window[size_t(n)] = 0.5 - 0.5 * std::cos(2.0 * 3.141592653589793238462643383279502884 *
                                             double(n) / double(cfg.frame));

  const size_t n_frames = (clip.samples.size() - size_t(cfg.frame)) / size_t(cfg.hop) + 1;
  const size_t n_bins = size_t(cfg.frame / 2 + 1);

  std::vector<double> sum(size_t(cfg.n_mels), 0.0), sumsq(size_t(cfg.n_mels), 0.0);
  std::vector<std::complex<double>> buf(size_t(cfg.frame));
  std::vector<double> mag(n_bins);

  for (size_t t = 0; t < n_frames; ++t) {
    const double* seg = clip.samples.data() + t * size_t(cfg.hop);
    for (int n = 0; n < cfg.frame; ++n) buf[size_t(n)] = {seg[n] * window[size_t(n)], 0.0};
    dsp::fft_radix2(buf);
    for (size_t b = 0; b < n_bins; ++b) mag[b] = std::abs(buf[b]);

    for (int k = 0; k < cfg.n_mels; ++k) {
      const double* w = &fb.weights[size_t(k) * n_bins];
      double e = 0.0;
      for (size_t b = 0; b < n_bins; ++b) e += w[b] * mag[b];
      double v = std::log(e + kLogFloor);
      sum[size_t(k)] += v;
      sumsq[size_t(k)] += v * v;
    }
  }

  Vec out(size_t(cfg.n_mels) * 2);
  for (int k = 0; k < cfg.n_mels; ++k) {
    double mean = sum[size_t(k)] / double(n_frames);
    double var = sumsq[size_t(k)] / double(n_frames) - mean * mean;
    out[size_t(k)] = mean;
    out[size_t(cfg.n_mels) + size_t(k)] = std::sqrt(std::max(0.0, var));
  }
  return out;
}

// ---------------------------------------------------------------------------
// WAV ingestion (16-bit PCM only; multi-channel averaged to mono).
// ---------------------------------------------------------------------------
inline AudioClip load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav '" + path + "'");
  auto read_u32 = [&]() -> uint32_t {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
  };
  auto read_u16 = [&]() -> uint16_t {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return uint16_t(b[0]) | uint16_t(uint32_t(b[1]) << 8);
  };
  char tag[5] = {};
  in.read(tag, 4);
  if (std::string_view(tag, 4) != "RIFF") throw ParseError("'" + path + "' is not a RIFF file");
  read_u32();
  in.read(tag, 4);
  if (std::string_view(tag, 4) != "WAVE") throw ParseError("'" + path + "' is not a WAVE file");

  uint16_t channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<int16_t> pcm;
  while (in.read(tag, 4)) {
    uint32_t chunk = read_u32();
    std::string_view id(tag, 4);
    if (id == "fmt ") {
      uint16_t format = read_u16();
      channels = read_u16();
      rate = read_u32();
      read_u32();  // byte rate
      read_u16();  // block align
      bits = read_u16();
      if (chunk > 16) in.seekg(chunk - 16, std::ios::cur);
      if (format != 1) throw ParseError("'" + path + "': only PCM wav is supported");
      if (bits != 16) throw ParseError("'" + path + "': only 16-bit wav is supported");
    } else if (id == "data") {
      pcm.resize(chunk / 2);
      in.read(reinterpret_cast<char*>(pcm.data()), std::streamsize(chunk));
      break;
    } else {
      in.seekg(chunk + (chunk & 1), std::ios::cur);
    }
  }
  if (channels == 0 || rate == 0) throw ParseError("'" + path + "': missing fmt chunk");
  if (pcm.empty()) throw ParseError("'" + path + "': missing data chunk");

  AudioClip clip;
  clip.sample_rate = double(rate);
  size_t frames = pcm.size() / channels;
  clip.samples.resize(frames);
  for (size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (size_t c = 0; c < channels; ++c) acc += double(pcm[i * channels + c]);
    clip.samples[i] = acc / (32768.0 * double(channels));
  }
  return clip;
}

inline void save_wav(const std::string& path, const AudioClip& clip) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write wav '" + path + "'");
  auto put_u32 = [&](uint32_t v) {
    unsigned char b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  auto put_u16 = [&](uint16_t v) {
    unsigned char b[2] = {uint8_t(v), uint8_t(v >> 8)};
    out.write(reinterpret_cast<char*>(b), 2);
  };
  uint32_t rate = uint32_t(std::llround(clip.sample_rate));
  uint32_t data_bytes = uint32_t(clip.samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(1);
  put_u16(1);
  put_u32(rate);
  put_u32(rate * 2);
  put_u16(2);
  put_u16(16);
  out.write("data", 4);
  put_u32(data_bytes);
  for (double s : clip.samples) {
    double clamped = std::min(1.0, std::max(-1.0, s));
    auto v = int16_t(std::llround(clamped * 32767.0));
    put_u16(uint16_t(v));
  }
}

// Nearest-neighbor resampling. Quality caveat: aliases above the new
// Nyquist; acceptable for the desk-scale ingestion path only.
inline AudioClip resample_nearest(const AudioClip& clip, double new_rate) {
  if (new_rate <= 0.0) throw ValidationError("sample rate must be > 0");
  AudioClip out;
  out.sample_rate = new_rate;
  auto n = size_t(std::llround(double(clip.samples.size()) * new_rate / clip.sample_rate));
  out.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    auto src = size_t(std::llround(double(i) * clip.sample_rate / new_rate));
    out.samples[i] = clip.samples[std::min(src, clip.samples.size() - 1)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature vectors and the BVF1 store
// ---------------------------------------------------------------------------
enum class Modality : uint32_t { Audio = 0, Image = 1, Text = 2 };
enum class Split : uint32_t { Train = 0, Test = 1 };

inline std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::Audio: return "audio";
    case Modality::Image: return "image";
    case Modality::Text: return "text";
  }
  return "?";
}

struct FeatureVector {
  std::vector<float> values;
  Modality modality = Modality::Audio;
  uint32_t species_index = 0;
  Split split = Split::Train;
};

// BVF1 layout: magic "BVF1", u32 count, u32 dim, u32 modality tag, then
// count records of (u32 species index, u32 split tag, dim f32), all
// little-endian.
inline void write_feature_store(const std::string& path, const std::vector<FeatureVector>& fvs,
                                Modality modality) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature store '" + path + "'");
  uint32_t count = 0, dim = 0;
  for (const auto& f : fvs) {
    if (f.modality != modality) continue;
    if (dim == 0) dim = uint32_t(f.values.size());
    if (f.values.size() != dim) throw ValidationError("inconsistent feature dims in store");
    ++count;
  }
  auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  out.write("BVF1", 4);
  put_u32(count);
  put_u32(dim);
  put_u32(uint32_t(modality));
  for (const auto& f : fvs) {
    if (f.modality != modality) continue;
    put_u32(f.species_index);
    put_u32(uint32_t(f.split));
    out.write(reinterpret_cast<const char*>(f.values.data()),
              std::streamsize(f.values.size() * sizeof(float)));
  }
  if (!out) throw IoError("error writing feature store '" + path + "'");
}

inline std::vector<FeatureVector> read_feature_store(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature store '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != "BVF1")
    throw ParseError("'" + path + "': bad magic, expected BVF1");
  auto get_u32 = [&]() -> uint32_t {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  uint32_t count = get_u32();
  uint32_t dim = get_u32();
  uint32_t tag = get_u32();
  if (tag > 2) throw ParseError("'" + path + "': unknown modality tag " + std::to_string(tag));
  std::vector<FeatureVector> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    FeatureVector f;
    f.modality = Modality(tag);
    f.species_index = get_u32();
    f.split = Split(get_u32());
    f.values.resize(dim);
    in.read(reinterpret_cast<char*>(f.values.data()), std::streamsize(dim * sizeof(float)));
    if (!in) throw ParseError("'" + path + "': truncated record " + std::to_string(i));
    out.push_back(std::move(f));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic tri-modal corpus. Each species s draws a latent z_s; audio
// samples are A z_s + noise, image samples are V z_s + noise. Per-species
// RNG streams derive from (seed, species index), so generation order and
// sharding cannot change the output.
// ---------------------------------------------------------------------------
struct SynthConfig {
  size_t n_species = 0;
  int latent_dim = 8;
  int audio_dim = 48;
  int image_dim = 48;
  int samples_per_species_per_modality = 20;
  double noise_sigma = 0.05;
  double train_fraction = 0.9;
  Mat audio_map;  // audio_dim x latent_dim; derived from seed when empty
  Mat image_map;  // image_dim x latent_dim; derived from seed when empty
  uint64_t seed = 0;
};

struct Corpus {
  std::vector<FeatureVector> samples;
  std::vector<Vec> latents;  // per species
  Mat audio_map, image_map;
  int audio_dim = 0, image_dim = 0;
};

inline Mat random_map(int rows, int cols, Rng& rng) {
  Mat m(size_t(rows), size_t(cols));
  double scale = 1.0 / std::sqrt(double(cols));
  for (auto& v : m.a) v = rng.gaussian() * scale;
  return m;
}

inline Corpus generate_synthetic_corpus(const Registry& reg, const SynthConfig& cfg) {
  if (cfg.latent_dim < 1 || cfg.audio_dim < 1 || cfg.image_dim < 1 ||
      cfg.samples_per_species_per_modality < 1)
    throw ValidationError("synthetic corpus dims must be >= 1");
  if (cfg.noise_sigma < 0.0) throw ValidationError("noise_sigma must be >= 0");
  if (reg.size() != cfg.n_species)
    throw ValidationError("registry species count " + std::to_string(reg.size()) +
                          " != cfg.n_species " + std::to_string(cfg.n_species));

  Corpus corpus;
  corpus.audio_dim = cfg.audio_dim;
  corpus.image_dim = cfg.image_dim;

  if (!cfg.audio_map.empty()) {
    if (cfg.audio_map.rows != size_t(cfg.audio_dim) || cfg.audio_map.cols != size_t(cfg.latent_dim))
      throw ValidationError("audio_map shape does not match audio_dim x latent_dim");
    corpus.audio_map = cfg.audio_map;
  } else {
    Rng rng(derive_seed(cfg.seed, "synth/audio_map"));
    corpus.audio_map = random_map(cfg.audio_dim, cfg.latent_dim, rng);
  }
  if (!cfg.image_map.empty()) {
    if (cfg.image_map.rows != size_t(cfg.image_dim) || cfg.image_map.cols != size_t(cfg.latent_dim))
      throw ValidationError("image_map shape does not match image_dim x latent_dim");
    corpus.image_map = cfg.image_map;
  } else {
    Rng rng(derive_seed(cfg.seed, "synth/image_map"));
    corpus.image_map = random_map(cfg.image_dim, cfg.latent_dim, rng);
  }

  const int n = cfg.samples_per_species_per_modality;
  const auto n_train = int(std::floor(cfg.train_fraction * double(n) + 1e-9));
  corpus.latents.resize(reg.size());
  corpus.samples.reserve(reg.size() * size_t(n) * 2);

  for (uint32_t s = 0; s < reg.size(); ++s) {
    Rng rng(derive_seed(cfg.seed, "synth/species/" + std::to_string(s)));
    Vec z(size_t(cfg.latent_dim));
    for (auto& v : z) v = rng.gaussian();
    corpus.latents[s] = z;

    auto emit = [&](const Mat& map, int dim, Modality mod) {
      Vec base = matvec(map, z);
      for (int k = 0; k < n; ++k) {
        FeatureVector f;
        f.modality = mod;
        f.species_index = s;
        bool train = !reg.is_unseen(s) && k < n_train;
        f.split = train ? Split::Train : Split::Test;
        f.values.resize(size_t(dim));
        for (int i = 0; i < dim; ++i)
          f.values[size_t(i)] = float(base[size_t(i)] + cfg.noise_sigma * rng.gaussian());
        corpus.samples.push_back(std::move(f));
      }
    };
    emit(corpus.audio_map, cfg.audio_dim, Modality::Audio);
    emit(corpus.image_map, cfg.image_dim, Modality::Image);
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// CorpusIndex: per-species train/test sample indices per modality, shared by
// the trainer and the benchmark builder.
// ---------------------------------------------------------------------------
class CorpusIndex {
 public:
  CorpusIndex() = default;

  CorpusIndex(const std::vector<FeatureVector>& samples, size_t n_species)
      : samples_(&samples) {
    audio_.resize(n_species);
    image_.resize(n_species);
    for (uint32_t i = 0; i < samples.size(); ++i) {
      const auto& f = samples[i];
      if (f.species_index >= n_species)
        throw ValidationError("feature species index out of range");
      auto& per = (f.modality == Modality::Audio) ? audio_ : image_;
      if (f.modality == Modality::Text) continue;
      per[f.species_index][size_t(f.split)].push_back(i);
    }
  }

  const std::vector<FeatureVector>& samples() const { return *samples_; }

  const std::vector<uint32_t>& of(Modality m, uint32_t species, Split split) const {
    const auto& per = (m == Modality::Audio) ? audio_ : image_;
    return per[species][size_t(split)];
  }

  size_t n_species() const { return audio_.size(); }

  int feature_dim(Modality m) const {
    for (const auto& f : *samples_)
      if (f.modality == m) return int(f.values.size());
    return 0;
  }

 private:
  const std::vector<FeatureVector>* samples_ = nullptr;
  // [species][split] -> sample indices
  std::vector<std::array<std::vector<uint32_t>, 2>> audio_, image_;
};

}  // namespace biovita
