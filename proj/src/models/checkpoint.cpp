#include "freqseg/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace freqseg {

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
    bool done() const { return pos_ == b_.size(); }

    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return v;
    }

    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n, const char* what) const {
        if (b_.size() - pos_ < n)
            throw CheckpointError(std::string("checkpoint truncated while reading ") + what +
                                  " at byte " + std::to_string(pos_));
    }
    const std::vector<std::uint8_t>& b_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<Tensor>& params) {
    std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
    put<std::uint16_t>(out, kCheckpointVersion);
    for (const auto& p : params) {
        const std::string& name = p.name();
        if (name.empty()) throw CheckpointError("cannot save an unnamed parameter");
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        const Shape& s = p.shape();
        put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
        for (std::size_t d : s) put<std::uint64_t>(out, d);
        for (double v : p.value().data()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

std::vector<NamedArray> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    if (r.bytes(sizeof kCheckpointMagic, "magic") !=
        std::string(kCheckpointMagic, sizeof kCheckpointMagic))
        throw CheckpointError("not a checkpoint: bad magic");
    const auto version = r.get<std::uint16_t>("version");
    if (version != kCheckpointVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    std::vector<NamedArray> out;
    while (!r.done()) {
        const auto len = r.get<std::uint32_t>("name length");
        std::string name = r.bytes(len, "name");
        const auto ndim = r.get<std::uint32_t>("rank");
        if (ndim == 0 || ndim > 8)
            throw CheckpointError("parameter '" + name + "' has bad rank " + std::to_string(ndim));
        Shape s(ndim);
        std::size_t n = 1;
        for (auto& d : s) {
            d = r.get<std::uint64_t>("extent");
            if (d == 0 || d > (std::size_t{1} << 32))
                throw CheckpointError("parameter '" + name + "' has bad extent " + std::to_string(d));
            n *= d;
        }
        std::vector<double> values(n);
        for (double& v : values) v = std::bit_cast<double>(r.get<std::uint64_t>("values"));
        out.push_back({std::move(name), NdArray(std::move(s), std::move(values))});
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<Tensor>& params) {
    const auto bytes = encode_checkpoint(params);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CheckpointError("write failed: " + path.string());
}

std::vector<NamedArray> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

void restore_parameters(const std::vector<Tensor>& params, const std::vector<NamedArray>& saved) {
    if (params.size() != saved.size())
        throw CheckpointError("checkpoint holds " + std::to_string(saved.size()) +
                              " parameters, model has " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name() != saved[i].name)
            throw CheckpointError("checkpoint parameter " + std::to_string(i) + " is '" +
                                  saved[i].name + "', model expects '" + params[i].name() + "'");
        if (params[i].shape() != saved[i].value.shape())
            throw CheckpointError("parameter '" + saved[i].name + "' has shape " +
                                  shape_to_string(saved[i].value.shape()) + ", model expects " +
                                  shape_to_string(params[i].shape()));
    }
    for (std::size_t i = 0; i < params.size(); ++i)
        Tensor(params[i]).mutable_value() = saved[i].value;
}

}  // namespace freqseg
