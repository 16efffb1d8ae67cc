// ioutil.hpp -- little-endian binary primitives and CSV text helpers shared
// by the corpus, n-best dump and checkpoint file formats.
#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace rebmkit {

void write_u32(std::ostream& os, uint32_t v);
void write_u64(std::ostream& os, uint64_t v);
void write_f64(std::ostream& os, double v);
void write_f64_span(std::ostream& os, std::span<const double> xs);
void write_string(std::ostream& os, const std::string& s);  // u32 length + bytes

// All readers throw CorruptArtifactError{context} on a short read.
uint32_t read_u32(std::istream& is, const std::string& context);
uint64_t read_u64(std::istream& is, const std::string& context);
double read_f64(std::istream& is, const std::string& context);
void read_f64_span(std::istream& is, std::span<double> out, const std::string& context);
std::string read_string(std::istream& is, const std::string& context);

std::string digest_hex(uint64_t digest);

// Shortest round-trippable decimal form ("%.17g" tier); used for every real
// value that lands in a CSV so reruns are byte-identical.
std::string fmt_double(double v);

std::ofstream open_output(const std::string& path);   // IoError-style failures
std::ifstream open_input(const std::string& path);    // MissingArtifactError when absent
std::vector<std::string> split_csv_line(const std::string& line);
std::vector<std::string> read_lines(const std::string& path);

}  // namespace rebmkit
