#include "recipemeta/checkpoint.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace recipemeta {

namespace {

constexpr char kMagic[8] = {'R', 'M', 'T', 'E', 'N', 'S', 'O', 'R'};

std::uint64_t to_little(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
    return v;
}

void put_u64(std::ostream& out, std::uint64_t v) {
    v = to_little(v);
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.write(buf, 8);
}

std::uint64_t get_u64(std::istream& in) {
    char buf[8];
    if (!in.read(buf, 8)) throw std::runtime_error("checkpoint truncated");
    std::uint64_t v;
    std::memcpy(&v, buf, 8);
    return to_little(v);
}

}  // namespace

void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
    nlohmann::ordered_json index;
    index["tensors"] = nlohmann::ordered_json::array();
    std::uint64_t offset = 0;
    for (const auto& t : tensors) {
        nlohmann::ordered_json entry;
        entry["name"] = t.name;
        entry["shape"] = {t.tensor.rows(), t.tensor.cols()};
        entry["offset"] = offset;
        index["tensors"].push_back(entry);
        offset += t.tensor.size() * sizeof(double);
    }
    const auto header = index.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kMagic, sizeof kMagic);
    put_u64(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& t : tensors) {
        for (double v : t.tensor.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    if (!out) throw std::runtime_error("error writing " + path.string());
}

std::vector<NamedTensor> read_tensors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error(path.string() + ": not a tensor checkpoint");
    }
    const auto header_len = get_u64(in);
    std::string header(header_len, '\0');
    if (!in.read(header.data(), static_cast<std::streamsize>(header_len))) {
        throw std::runtime_error(path.string() + ": truncated index");
    }
    const auto index = nlohmann::json::parse(header);
    const auto payload_start = in.tellg();

    std::vector<NamedTensor> out;
    for (const auto& entry : index.at("tensors")) {
        const auto rows = entry.at("shape").at(0).get<std::size_t>();
        const auto cols = entry.at("shape").at(1).get<std::size_t>();
        const auto offset = entry.at("offset").get<std::uint64_t>();
        in.seekg(payload_start + static_cast<std::streamoff>(offset));
        std::vector<double> data(rows * cols);
        for (auto& v : data) v = std::bit_cast<double>(get_u64(in));
        out.push_back({entry.at("name").get<std::string>(), ad::Tensor({rows, cols}, std::move(data))});
    }
    return out;
}

void restore_tensors(std::vector<NamedTensor>& params, const std::vector<NamedTensor>& saved) {
    std::unordered_map<std::string, const ad::Tensor*> by_name;
    for (const auto& s : saved) by_name[s.name] = &s.tensor;
    if (by_name.size() != params.size()) {
        throw std::runtime_error("checkpoint holds " + std::to_string(by_name.size()) + " tensors, model expects " +
                                 std::to_string(params.size()));
    }
    for (auto& p : params) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) throw std::runtime_error("checkpoint lacks tensor '" + p.name + "'");
        if (it->second->shape() != p.tensor.shape()) {
            throw std::runtime_error("checkpoint tensor '" + p.name + "' has shape " + it->second->shape().str() +
                                     ", model expects " + p.tensor.shape().str());
        }
        auto src = it->second->data();
        std::copy(src.begin(), src.end(), p.tensor.mutable_data().begin());
    }
}

}  // namespace recipemeta
