#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "packiht/geno_matrix.hpp"

namespace packiht {

inline constexpr std::uint8_t kBedMagic0 = 0x6C;
inline constexpr std::uint8_t kBedMagic1 = 0x1B;
inline constexpr std::uint8_t kBedVariantMajor = 0x01;

struct BedHeader {
  std::uint8_t magic0 = kBedMagic0;
  std::uint8_t magic1 = kBedMagic1;
  std::uint8_t mode = kBedVariantMajor;

  /// Throws FormatError unless the magic is 0x6C 0x1B and the mode is variant-major.
  void validate() const;
};

struct VariantRecord {
  std::string chromosome;
  std::string identifier;
  double genetic_distance = 0.0;
  std::int64_t position = 0;
  std::string allele1;
  std::string allele2;
};

struct SampleRecord {
  std::string family_id;
  std::string individual_id;
  std::string father_id;
  std::string mother_id;
  int sex = 0;
  std::optional<double> phenotype;  // -9 and NA read as missing
};

/// Reads a variant-major BED file. The byte length must equal
/// 3 + n_variants * ceil(n_samples / 4).
PackedGenotypeMatrix read_bed(const std::filesystem::path& path, std::size_t n_samples,
                              std::size_t n_variants, int threads = 1);

/// Writes header plus the packed variant-major body.
void write_bed(const PackedGenotypeMatrix& matrix, const std::filesystem::path& path);

std::vector<VariantRecord> read_bim(const std::filesystem::path& path);
std::vector<SampleRecord> read_fam(const std::filesystem::path& path);

void write_bim(const std::vector<VariantRecord>& variants, const std::filesystem::path& path);
void write_fam(const std::vector<SampleRecord>& samples, const std::filesystem::path& path);

/// BED/BIM/FAM triple with consistent dimensions.
struct PlinkDataset {
  PackedGenotypeMatrix genotypes;
  std::vector<VariantRecord> variants;
  std::vector<SampleRecord> samples;
};

/// Reads all three files. BED dimensions come from the BIM and FAM record
/// counts; a size mismatch is reported as a FormatError.
PlinkDataset read_plink(const std::filesystem::path& bed, const std::filesystem::path& bim,
                        const std::filesystem::path& fam, int threads = 1);

}  // namespace packiht
