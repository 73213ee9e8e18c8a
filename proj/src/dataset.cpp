#include "bcdrive/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iterator>
#include <numeric>
#include <sstream>

#include "bcdrive/errors.hpp"
#include "bcdrive/rng.hpp"

namespace bcdrive {

namespace fs = std::filesystem;

void validate_sample_path(const std::string& path) {
  if (path.empty()) throw ContractError("sample path is empty");
  if (path.find('\\') != std::string::npos) {
    throw ContractError("sample path must use forward slashes: " + path);
  }
  if (path.front() == '/') throw ContractError("sample path must be relative: " + path);
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t end = std::min(path.find('/', start), path.size());
    if (path.compare(start, end - start, "..") == 0) {
      throw ContractError("sample path must not leave the dataset directory: " + path);
    }
    start = end + 1;
  }
}

std::array<std::size_t, 3> Manifest::class_counts() const {
  std::array<std::size_t, 3> counts{};
  for (const Sample& s : samples) ++counts[class_index(s.label)];
  return counts;
}

// ---------------------------------------------------------------------------
// Manifest CSV
// ---------------------------------------------------------------------------

std::string format_manifest(const Manifest& manifest) {
  std::string out = std::string(kManifestHeader) + "\n";
  for (const Sample& s : manifest.samples) {
    validate_sample_path(s.image_path);
    if (s.image_path.find(',') != std::string::npos || s.image_path.find('\n') != std::string::npos) {
      throw ContractError("sample path cannot contain ',' or newline: " + s.image_path);
    }
    out += s.image_path;
    out += ',';
    out += std::to_string(to_int(s.label));
    out += '\n';
  }
  return out;
}

std::vector<Sample> parse_manifest(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) -> FormatError {
    return FormatError(origin + ":" + std::to_string(line_no) + ": " + why);
  };
  auto next_line = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line() || line != kManifestHeader) {
    line_no = std::max<std::size_t>(line_no, 1);
    throw fail(std::string("missing header '") + kManifestHeader + "'");
  }
  std::vector<Sample> samples;
  while (next_line()) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw fail("expected 'path,label', got '" + line + "'");
    }
    const std::string path = line.substr(0, comma);
    const std::string label = line.substr(comma + 1);
    int value = 0;
    if (label == "-1") {
      value = -1;
    } else if (label == "0") {
      value = 0;
    } else if (label == "1") {
      value = 1;
    } else {
      throw fail("label must be -1, 0 or 1, got '" + label + "'");
    }
    try {
      validate_sample_path(path);
    } catch (const ContractError& e) {
      throw fail(e.what());
    }
    samples.push_back({path, static_cast<SteerClass>(value)});
  }
  return samples;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  const std::string text = format_manifest(manifest);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write manifest " + path.string());
  os << text;
  if (!os) throw IoError("failed writing manifest " + path.string());
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open manifest " + path.string());
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  Manifest m;
  m.samples = parse_manifest(text, path.string());
  m.base_dir = path.parent_path();
  return m;
}

void validate_files(const Manifest& manifest) {
  for (const Sample& s : manifest.samples) {
    if (!fs::is_regular_file(manifest.resolve(s))) {
      throw IoError("missing image file " + manifest.resolve(s).string());
    }
  }
}

// ---------------------------------------------------------------------------
// PGM
// ---------------------------------------------------------------------------

std::vector<std::uint8_t> encode_pgm(const Frame& frame) {
  if (frame.rank() != 3 || frame.dim(0) != 1) {
    throw ShapeError("PGM frames must be [1,H,W], got " + frame.shape_string());
  }
  const std::size_t h = frame.dim(1);
  const std::size_t w = frame.dim(2);
  const std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + w * h);
  for (double v : frame.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ContractError("frame value " + std::to_string(v) + " outside [0,1]");
    }
    out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  return out;
}

Frame decode_pgm(std::span<const std::uint8_t> bytes, const std::string& origin) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) { return FormatError(origin + ": " + why); };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) -> std::size_t {
    skip_space();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      ++pos;
      if (++digits > 9) throw fail(std::string("PGM ") + what + " too large");
    }
    if (digits == 0) throw fail(std::string("PGM header missing ") + what);
    return value;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw fail("not a binary PGM (P5)");
  pos = 2;
  const std::size_t w = read_uint("width");
  const std::size_t h = read_uint("height");
  const std::size_t maxval = read_uint("maxval");
  if (w == 0 || h == 0) throw fail("PGM dimensions must be positive");
  if (maxval == 0 || maxval > 255) throw fail("PGM maxval must be in 1..255");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("PGM header not terminated");
  ++pos;
  if (bytes.size() - pos < w * h) {
    throw fail("truncated PGM data: need " + std::to_string(w * h) + " bytes, have " +
               std::to_string(bytes.size() - pos));
  }
  Frame frame({1, h, w});
  const double scale = static_cast<double>(maxval);
  for (std::size_t i = 0; i < w * h; ++i) {
    frame[i] = std::min(1.0, static_cast<double>(bytes[pos + i]) / scale);
  }
  return frame;
}

void write_frame(const Frame& frame, const fs::path& path) {
  const auto bytes = encode_pgm(frame);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write image " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing image " + path.string());
}

Frame read_frame(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open image " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                        std::istreambuf_iterator<char>());
  return decode_pgm(bytes, path.string());
}

// ---------------------------------------------------------------------------
// Split / augmentation
// ---------------------------------------------------------------------------

SplitResult split(const Manifest& manifest, const SplitSpec& spec) {
  const std::size_t n = manifest.samples.size();
  if (n < 2) throw ContractError("split needs at least 2 samples, got " + std::to_string(n));
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ContractError("train_fraction must be in (0,1)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(spec.shuffle_seed, 0x5b11));
  rng.shuffle(std::span<std::size_t>(order));

  // The epsilon absorbs representation error in products like 200 * 0.8.
  const auto n_train =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.train_fraction + 1e-9));
  SplitResult r;
  r.train.base_dir = manifest.base_dir;
  r.test.base_dir = manifest.base_dir;
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? r.train : r.test).samples.push_back(manifest.samples[order[i]]);
  }
  return r;
}

Frame mirror_columns(const Frame& frame) {
  if (frame.rank() != 3) throw ShapeError("mirror expects [C,H,W], got " + frame.shape_string());
  Frame out = frame;
  const std::size_t w = frame.dim(2);
  for (std::size_t c = 0; c < frame.dim(0); ++c) {
    for (std::size_t i = 0; i < frame.dim(1); ++i) {
      for (std::size_t j = 0; j < w; ++j) out.at(c, i, j) = frame.at(c, i, w - 1 - j);
    }
  }
  return out;
}

std::pair<Frame, SteerClass> augment_flip(const Frame& frame, SteerClass label) {
  return {mirror_columns(frame), negate(label)};
}

// ---------------------------------------------------------------------------
// Recording
// ---------------------------------------------------------------------------

RunRecorder::RunRecorder(fs::path out_dir, Manifest manifest, std::size_t next_index,
                         std::ofstream log)
    : out_dir_(std::move(out_dir)),
      manifest_(std::move(manifest)),
      next_index_(next_index),
      log_(std::move(log)) {}

RunRecorder RunRecorder::create(const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir / "dataset", ec);
  if (ec) throw IoError("cannot create dataset directory " + out_dir.string() + ": " + ec.message());
  const fs::path log_path = out_dir / kManifestName;
  if (fs::exists(log_path)) {
    throw IoError("refusing to overwrite existing manifest " + log_path.string());
  }
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw IoError("cannot write manifest " + log_path.string());
  log << kManifestHeader << '\n';
  log.flush();
  if (!log) throw IoError("failed writing manifest " + log_path.string());
  Manifest m;
  m.base_dir = out_dir;
  return RunRecorder(out_dir, std::move(m), 1, std::move(log));
}

RunRecorder RunRecorder::append_to(const fs::path& out_dir) {
  const fs::path log_path = out_dir / kManifestName;
  Manifest m = read_manifest(log_path);
  m.base_dir = out_dir;
  std::size_t next = m.samples.size() + 1;
  for (const Sample& s : m.samples) {
    const fs::path p(s.image_path);
    const std::string stem = p.stem().string();
    if (!stem.empty() && std::all_of(stem.begin(), stem.end(), ::isdigit) && stem.size() < 10) {
      next = std::max(next, static_cast<std::size_t>(std::stoul(stem)) + 1);
    }
  }
  std::error_code ec;
  fs::create_directories(out_dir / "dataset", ec);
  if (ec) throw IoError("cannot create dataset directory " + out_dir.string() + ": " + ec.message());
  std::ofstream log(log_path, std::ios::binary | std::ios::app);
  if (!log) throw IoError("cannot append to manifest " + log_path.string());
  return RunRecorder(out_dir, std::move(m), next, std::move(log));
}

const Sample& RunRecorder::append(const Frame& frame, SteerClass label) {
  Sample s{"dataset/" + std::to_string(next_index_) + ".pgm", label};
  write_frame(frame, out_dir_ / s.image_path);
  log_ << s.image_path << ',' << to_int(label) << '\n';
  log_.flush();
  if (!log_) throw IoError("failed appending to manifest in " + out_dir_.string());
  ++next_index_;
  manifest_.samples.push_back(std::move(s));
  return manifest_.samples.back();
}

Manifest record_run(std::span<const LabeledFrame> stream, const fs::path& out_dir) {
  RunRecorder rec = RunRecorder::create(out_dir);
  for (const LabeledFrame& lf : stream) rec.append(lf.frame, lf.label);
  return rec.manifest();
}

}  // namespace bcdrive
