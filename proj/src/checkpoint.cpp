#include "semg/checkpoint.hpp"

#include "binary_io.hpp"
#include "semg/json.hpp"

#include <fstream>

namespace semg {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'E', 'M', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxString = 1u << 20;

using detail::put_le;

template <typename T>
T get(std::istream& in) {
  return detail::get_le<T>(in, "checkpoint");
}

void put_string(std::ostream& out, const std::string& s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > kMaxString) throw FormatError("checkpoint string too long");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw FormatError("truncated checkpoint");
  return s;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) put_le<double>(out, m(r, c));
}

void get_matrix(std::istream& in, Matrix& m, const std::string& name) {
  const auto rows = get<std::uint32_t>(in);
  const auto cols = get<std::uint32_t>(in);
  if (rows != m.rows() || cols != m.cols())
    throw DimensionError("checkpoint tensor " + name + " has shape " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", model expects " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = get<double>(in);
}

}  // namespace

void write_checkpoint(std::ostream& out, const Model& model, const OptState* optimizer, int next_epoch) {
  const auto& params = model.parameters();
  if (optimizer) optimizer->check(params);
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  put_string(out, nlohmann::json(model.config()).dump());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_string(out, p.name);
    put_matrix(out, p.value);
  }
  put_le<std::uint8_t>(out, optimizer ? 1 : 0);
  if (optimizer) {
    put_le<std::int64_t>(out, optimizer->step);
    put_le<std::int32_t>(out, next_epoch);
    for (std::size_t i = 0; i < params.size(); ++i) {
      put_matrix(out, optimizer->first_moment[i]);
      put_matrix(out, optimizer->second_moment[i]);
      put_matrix(out, optimizer->slow[i]);
    }
  }
  if (!out) throw Error("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("not a checkpoint file");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));

  ModelConfig config;
  try {
    config = nlohmann::json::parse(get_string(in)).get<ModelConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  Checkpoint ck{Model::build(config, 0), std::nullopt, 0};
  auto& params = ck.model.parameters();
  const auto count = get<std::uint32_t>(in);
  if (count != params.size())
    throw DimensionError("checkpoint has " + std::to_string(count) + " tensors, model expects " +
                         std::to_string(params.size()));
  for (auto& p : params) {
    const auto name = get_string(in);
    if (name != p.name) throw FormatError("checkpoint tensor " + name + " where " + p.name + " was expected");
    get_matrix(in, p.value, name);
  }
  if (get<std::uint8_t>(in) != 0) {
    OptState st = OptState::for_parameters(params);
    st.step = get<std::int64_t>(in);
    ck.next_epoch = get<std::int32_t>(in);
    for (std::size_t i = 0; i < params.size(); ++i) {
      get_matrix(in, st.first_moment[i], params[i].name + ".m");
      get_matrix(in, st.second_moment[i], params[i].name + ".v");
      get_matrix(in, st.slow[i], params[i].name + ".slow");
    }
    ck.optimizer = std::move(st);
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const OptState* optimizer,
                     int next_epoch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, model, optimizer, next_epoch);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace semg
