#include "hypobench/autodiff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>

#include "hypobench/common/errors.hpp"
#include "hypobench/common/io.hpp"

namespace hypobench::ad {

namespace {

constexpr char kMagic[8] = {'H', 'B', 'C', 'K', 'P', 'T', '\0', '\0'};

template <class U>
void put_le(std::string& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

class Reader {
   public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <class U>
    U get_le() {
        need(sizeof(U));
        U value = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            value |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(U);
        return value;
    }

    std::string get_bytes(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

   private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw ParseError("checkpoint: truncated file");
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors) {
    std::string out(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
        for (auto d : tensor.shape()) put_le<std::uint64_t>(out, d);
        for (double v : tensor.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

std::vector<NamedTensor> decode_checkpoint(const std::string& bytes) {
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw ParseError("checkpoint: bad magic");
    }
    Reader in(bytes);
    in.get_bytes(sizeof kMagic);
    const auto version = in.get_le<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw ParseError("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto count = in.get_le<std::uint32_t>();
    std::vector<NamedTensor> tensors;
    for (std::uint32_t t = 0; t < count; ++t) {
        NamedTensor entry;
        entry.name = in.get_bytes(in.get_le<std::uint32_t>());
        const auto rank = in.get_le<std::uint32_t>();
        Shape shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(in.get_le<std::uint64_t>());
        std::vector<double> values(shape_numel(shape));
        for (auto& v : values) v = std::bit_cast<double>(in.get_le<std::uint64_t>());
        entry.tensor = Tensor::from(std::move(shape), std::move(values));
        tensors.push_back(std::move(entry));
    }
    if (!in.done()) throw ParseError("checkpoint: trailing bytes");
    return tensors;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
    write_file_atomic(path, encode_checkpoint(tensors));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

void restore_parameters(const std::vector<NamedTensor>& saved, std::vector<NamedTensor>& params) {
    std::map<std::string, const Tensor*> by_name;
    for (const auto& s : saved) by_name[s.name] = &s.tensor;
    for (auto& p : params) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) throw ContractError("checkpoint: missing parameter '" + p.name + "'");
        if (it->second->shape() != p.tensor.shape()) {
            throw ContractError("checkpoint: parameter '" + p.name + "' has shape " +
                                shape_str(it->second->shape()) + ", model expects " + shape_str(p.tensor.shape()));
        }
        auto src = it->second->values();
        auto dst = p.tensor.mutable_values();
        std::copy(src.begin(), src.end(), dst.begin());
    }
}

}  // namespace hypobench::ad
