#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bcdrive/sim.hpp"
#include "bcdrive/tensor.hpp"

namespace bcdrive {

struct Sample {
  std::string image_path;  // relative, forward slashes
  SteerClass label = SteerClass::Straight;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Throws ContractError for empty or absolute paths, backslashes and ".." components.
void validate_sample_path(const std::string& path);

struct Manifest {
  std::vector<Sample> samples;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const Sample& s) const { return base_dir / s.image_path; }
  std::array<std::size_t, 3> class_counts() const;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

inline constexpr const char* kManifestName = "drive_log.csv";
inline constexpr const char* kManifestHeader = "IMG,steer";

std::string format_manifest(const Manifest& manifest);
// `origin` is used in parse error messages ("origin:line: ...").
std::vector<Sample> parse_manifest(const std::string& text, const std::string& origin);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
// base_dir of the result is the directory containing `path`.
Manifest read_manifest(const std::filesystem::path& path);
// Throws IoError naming the first referenced image that does not exist.
void validate_files(const Manifest& manifest);

// Binary PGM (P5, maxval 255).
std::vector<std::uint8_t> encode_pgm(const Frame& frame);
Frame decode_pgm(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");
void write_frame(const Frame& frame, const std::filesystem::path& path);
Frame read_frame(const std::filesystem::path& path);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t shuffle_seed = 0;
};

struct SplitResult {
  Manifest train;
  Manifest test;
};

SplitResult split(const Manifest& manifest, const SplitSpec& spec);

// Mirrors columns and negates the label.
std::pair<Frame, SteerClass> augment_flip(const Frame& frame, SteerClass label);
Frame mirror_columns(const Frame& frame);

struct LabeledFrame {
  Frame frame;
  SteerClass label = SteerClass::Straight;
};

// Incremental dataset writer. Each append writes dataset/<n>.pgm and then its
// manifest row, flushing, so the manifest never references a missing frame.
class RunRecorder {
 public:
  // Fresh dataset; refuses a directory that already holds drive_log.csv.
  static RunRecorder create(const std::filesystem::path& out_dir);
  // Continues an existing dataset, numbering after its highest image index.
  static RunRecorder append_to(const std::filesystem::path& out_dir);

  RunRecorder(RunRecorder&&) = default;
  RunRecorder& operator=(RunRecorder&&) = default;

  const Sample& append(const Frame& frame, SteerClass label);
  const Manifest& manifest() const noexcept { return manifest_; }
  std::size_t next_index() const noexcept { return next_index_; }

 private:
  RunRecorder(std::filesystem::path out_dir, Manifest manifest, std::size_t next_index,
              std::ofstream log);

  std::filesystem::path out_dir_;
  Manifest manifest_;
  std::size_t next_index_ = 1;
  std::ofstream log_;
};

Manifest record_run(std::span<const LabeledFrame> stream, const std::filesystem::path& out_dir);

}  // namespace bcdrive
