#include "packiht/plink_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <system_error>

#include "packiht/error.hpp"

namespace packiht {

namespace {

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string token;
  while (in >> token) fields.push_back(token);
  return fields;
}

std::string location(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::string format_double(double x) {
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

}  // namespace

void BedHeader::validate() const {
  if (magic0 != kBedMagic0 || magic1 != kBedMagic1) {
    throw FormatError("not a PLINK BED file (bad magic bytes)");
  }
  if (mode != kBedVariantMajor) {
    throw FormatError("unsupported BED storage mode " + std::to_string(mode) +
                      " (only variant-major 0x01 is accepted)");
  }
}

PackedGenotypeMatrix read_bed(const std::filesystem::path& path, std::size_t n_samples,
                              std::size_t n_variants, int threads) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw FormatError("cannot open " + path.string() + ": " + ec.message());
  const std::size_t expected = 3 + n_variants * packed_bytes(n_samples);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());

  BedHeader header;
  char magic[3] = {0, 0, 0};
  in.read(magic, 3);
  if (in.gcount() != 3) throw FormatError(path.string() + ": truncated BED header");
  header.magic0 = static_cast<std::uint8_t>(magic[0]);
  header.magic1 = static_cast<std::uint8_t>(magic[1]);
  header.mode = static_cast<std::uint8_t>(magic[2]);
  header.validate();

  if (size != expected) {
    throw FormatError(path.string() + ": BED has " + std::to_string(size) + " bytes but " +
                      std::to_string(n_samples) + " samples x " + std::to_string(n_variants) +
                      " variants require " + std::to_string(expected) +
                      " (BIM/FAM record counts disagree with the BED file)");
  }
  std::vector<std::uint8_t> body(expected - 3);
  in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (static_cast<std::size_t>(in.gcount()) != body.size()) {
    throw FormatError(path.string() + ": short read");
  }
  return PackedGenotypeMatrix::from_packed(n_samples, n_variants, std::move(body), threads);
}

void write_bed(const PackedGenotypeMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  const char header[3] = {static_cast<char>(kBedMagic0), static_cast<char>(kBedMagic1),
                          static_cast<char>(kBedVariantMajor)};
  out.write(header, 3);
  out.write(reinterpret_cast<const char*>(matrix.data().data()),
            static_cast<std::streamsize>(matrix.data().size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

std::vector<VariantRecord> read_bim(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::vector<VariantRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() != 6) {
      throw FormatError(location(path, line_no) + ": expected 6 BIM columns, found " +
                        std::to_string(fields.size()));
    }
    VariantRecord rec;
    rec.chromosome = fields[0];
    rec.identifier = fields[1];
    if (!parse_number(fields[2], rec.genetic_distance)) {
      throw FormatError(location(path, line_no) + ": bad genetic distance '" + fields[2] + "'");
    }
    if (!parse_number(fields[3], rec.position) || rec.position < 0) {
      throw FormatError(location(path, line_no) + ": bad base-pair position '" + fields[3] + "'");
    }
    rec.allele1 = fields[4];
    rec.allele2 = fields[5];
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<SampleRecord> read_fam(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::vector<SampleRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() != 6) {
      throw FormatError(location(path, line_no) + ": expected 6 FAM columns, found " +
                        std::to_string(fields.size()));
    }
    SampleRecord rec;
    rec.family_id = fields[0];
    rec.individual_id = fields[1];
    rec.father_id = fields[2];
    rec.mother_id = fields[3];
    if (!parse_number(fields[4], rec.sex)) {
      throw FormatError(location(path, line_no) + ": bad sex code '" + fields[4] + "'");
    }
    const std::string& pheno = fields[5];
    if (pheno != "-9" && pheno != "NA" && pheno != "na") {
      double value = 0.0;
      if (!parse_number(pheno, value)) {
        throw FormatError(location(path, line_no) + ": bad phenotype '" + pheno + "'");
      }
      rec.phenotype = value;
    }
    if (!seen.emplace(rec.family_id, rec.individual_id).second) {
      throw FormatError(location(path, line_no) + ": duplicate sample (" + rec.family_id + ", " +
                        rec.individual_id + ")");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_bim(const std::vector<VariantRecord>& variants, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& v : variants) {
    out << v.chromosome << '\t' << v.identifier << '\t' << format_double(v.genetic_distance) << '\t'
        << v.position << '\t' << v.allele1 << '\t' << v.allele2 << '\n';
  }
}

void write_fam(const std::vector<SampleRecord>& samples, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& s : samples) {
    out << s.family_id << ' ' << s.individual_id << ' ' << s.father_id << ' ' << s.mother_id << ' '
        << s.sex << ' ' << (s.phenotype ? format_double(*s.phenotype) : std::string("-9")) << '\n';
  }
}

PlinkDataset read_plink(const std::filesystem::path& bed, const std::filesystem::path& bim,
                        const std::filesystem::path& fam, int threads) {
  PlinkDataset ds;
  ds.variants = read_bim(bim);
  ds.samples = read_fam(fam);
  ds.genotypes = read_bed(bed, ds.samples.size(), ds.variants.size(), threads);
  return ds;
}

}  // namespace packiht
