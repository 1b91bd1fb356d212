#include "fedzip/bytes.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

namespace fedzip {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::IoError: return "IoError";
    case Errc::WrongDtype: return "WrongDtype";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::InvalidBound: return "InvalidBound";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::CorruptPayload: return "CorruptPayload";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::CorruptStream: return "CorruptStream";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UnknownCodec: return "UnknownCodec";
    case Errc::NoBreakeven: return "NoBreakeven";
    case Errc::NoFeasibleCandidate: return "NoFeasibleCandidate";
    case Errc::NoFeasibleEpsilon: return "NoFeasibleEpsilon";
    case Errc::StructureMismatch: return "StructureMismatch";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::LengthMismatch: return "LengthMismatch";
  }
  return "Unknown";
}

std::uint32_t crc32(ByteSpan data) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < data.size(); off += kChunk) {
    auto n = std::min(kChunk, data.size() - off);
    crc = ::crc32(crc, data.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "' for reading");
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(Errc::IoError, "read error on '" + path + "'");
  return out;
}

void write_file(const std::string& path, ByteSpan data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) fail(Errc::IoError, "write error on '" + path + "'");
}

}  // namespace fedzip
