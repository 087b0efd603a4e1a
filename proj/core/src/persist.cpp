#include "vix/persist.hpp"

#include "vix/errors.hpp"

#include <json.hpp>
#include <zlib.h>

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

static_assert(std::endian::native == std::endian::little,
              "vector arrays are persisted as little-endian float32");

namespace vix {

namespace {

using nlohmann::json;

constexpr const char* kBundleFormat = "vix-bundle";

const std::vector<std::string>& bundle_files() {
    static const std::vector<std::string> files = {
        "manifest.json", "config.json",  "segments.jsonl", "entities.jsonl",
        "scenes.jsonl",  "summary.txt",  "records.jsonl",  "vectors.bin"};
    return files;
}

std::uint32_t crc32_of(const std::string& bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

json range_json(const TimeRange& r) {
    return json::array({r.start_s, r.end_s});
}

TimeRange range_from(const json& j) {
    return TimeRange{j.at(0).get<double>(), j.at(1).get<double>()};
}

json manifest_json(const SourceManifest& m) {
    return {{"video_id", m.video_id},
            {"duration_s", m.duration_s},
            {"transcript", m.transcript_path},
            {"frames_dir", m.frames_dir},
            {"language", m.language_tag},
            {"segment_len_s", m.segment_len_s},
            {"frames_per_segment", m.frames_per_segment}};
}

SourceManifest manifest_from(const json& j) {
    SourceManifest m;
    m.video_id = j.value("video_id", "");
    m.duration_s = j.value("duration_s", 0.0);
    m.transcript_path = j.value("transcript", "");
    m.frames_dir = j.value("frames_dir", "");
    m.language_tag = j.value("language", "");
    m.segment_len_s = j.value("segment_len_s", 30.0);
    m.frames_per_segment = j.value("frames_per_segment", 20);
    return m;
}

json config_json(const BuildConfig& c) {
    return {{"subsegments_per_segment", c.subsegments_per_segment},
            {"cluster_threshold", c.cluster_threshold},
            {"entity_top_k1", c.entity_top_k1},
            {"entity_top_k2", c.entity_top_k2},
            {"search_k", c.search_k},
            {"chunk_size", c.chunk_size},
            {"chunk_overlap", c.chunk_overlap},
            {"max_steps", c.max_steps},
            {"max_frames", c.max_frames},
            {"memory_char_budget", c.memory_char_budget},
            {"workers", c.workers}};
}

BuildConfig config_from(const json& j) {
    BuildConfig c;
    c.subsegments_per_segment = j.value("subsegments_per_segment", 1);
    c.cluster_threshold = j.value("cluster_threshold", 0.80);
    c.entity_top_k1 = j.value("entity_top_k1", 5);
    c.entity_top_k2 = j.value("entity_top_k2", 8);
    c.search_k = j.value("search_k", 5);
    c.chunk_size = j.value("chunk_size", 20);
    c.chunk_overlap = j.value("chunk_overlap", 4);
    c.max_steps = j.value("max_steps", 10);
    c.max_frames = j.value("max_frames", 50);
    c.memory_char_budget = j.value("memory_char_budget", 60000);
    c.workers = j.value("workers", 4);
    return c;
}

std::string segments_jsonl(const IndexDatabase& db) {
    std::string out;
    for (const Segment& s : db.segments) {
        json turns = json::array();
        for (const SpeakerTurn& t : s.transcript)
            turns.push_back({{"speaker", t.speaker},
                             {"start", t.range.start_s},
                             {"end", t.range.end_s},
                             {"text", t.text}});
        json frames = json::array();
        for (const FrameRef& f : s.frame_refs)
            frames.push_back(json::array({f.timestamp_s, f.path}));
        json rec{{"index", s.index},
                 {"range", range_json(s.range)},
                 {"speakers", s.speakers},
                 {"transcript", turns},
                 {"caption", s.caption},
                 {"fused_speaker_info", s.fused_speaker_info},
                 {"composed_text", s.composed_text},
                 {"frame_refs", frames}};
        out += rec.dump();
        out += '\n';
    }
    return out;
}

std::string entities_jsonl(const IndexDatabase& db) {
    std::string out;
    for (const CanonicalEntity& e : db.entities) {
        json recaps = json::array();
        for (const auto& [seg, text] : e.recaptions)
            recaps.push_back(json::array({seg, text}));
        json rec{{"id", e.id},
                 {"name", e.name},
                 {"category", std::string(to_string(e.category))},
                 {"description", e.global_description},
                 {"linked_segments", e.linked_segments},
                 {"speaker_labels", e.speaker_labels},
                 {"recaptions", recaps},
                 {"member_mentions", e.member_mentions}};
        out += rec.dump();
        out += '\n';
    }
    return out;
}

std::string scenes_jsonl(const IndexDatabase& db) {
    std::string out;
    for (const Scene& s : db.scenes) {
        json rec{{"id", s.id},
                 {"first_segment", s.first_segment},
                 {"last_segment", s.last_segment},
                 {"summary", s.summary}};
        out += rec.dump();
        out += '\n';
    }
    return out;
}

std::vector<json> parse_jsonl(const std::string& text, const std::string& name) {
    std::vector<json> out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos)
            eol = text.size();
        ++line_no;
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos)
            continue;
        json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded() || !j.is_object())
            throw CorruptBundle(fmt::format("{}:{}: malformed record", name, line_no));
        out.push_back(std::move(j));
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CorruptBundle(fmt::format("missing bundle file {}", path.string()));
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw InputError(fmt::format("cannot write {}", path.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

void save_index(const IndexDatabase& db, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    std::map<std::string, std::string> files;
    files["manifest.json"] = manifest_json(db.manifest).dump(2) + "\n";
    files["config.json"] = config_json(db.config).dump(2) + "\n";
    files["segments.jsonl"] = segments_jsonl(db);
    files["entities.jsonl"] = entities_jsonl(db);
    files["scenes.jsonl"] = scenes_jsonl(db);
    files["summary.txt"] = db.global_summary;

    std::string records;
    std::string vectors;
    std::size_t offset = 0;
    for (const VectorRecord& rec : db.store.records()) {
        json line{{"kind", std::string(to_string(rec.id.kind))},
                  {"key", rec.id.key},
                  {"offset", offset},
                  {"dim", rec.vector.size()},
                  {"ranges", json::array()},
                  {"payload", rec.payload}};
        for (const TimeRange& r : rec.time_ranges)
            line["ranges"].push_back(range_json(r));
        records += line.dump();
        records += '\n';
        std::size_t bytes = rec.vector.size() * sizeof(float);
        std::size_t old = vectors.size();
        vectors.resize(old + bytes);
        std::memcpy(vectors.data() + old, rec.vector.data(), bytes);
        offset += rec.vector.size();
    }
    files["records.jsonl"] = std::move(records);
    files["vectors.bin"] = std::move(vectors);

    json header{{"format", kBundleFormat}, {"format_version", db.format_version}};
    json file_table = json::object();
    for (const auto& [name, bytes] : files)
        file_table[name] = {{"bytes", bytes.size()}, {"crc32", crc32_of(bytes)}};
    header["files"] = file_table;

    for (const auto& [name, bytes] : files)
        write_file(dir / name, bytes);
    write_file(dir / "header.json", header.dump(2) + "\n");
}

IndexDatabase load_index(const std::filesystem::path& dir) {
    json header = json::parse(read_file(dir / "header.json"), nullptr, false);
    if (header.is_discarded() || !header.is_object() ||
        header.value("format", "") != kBundleFormat)
        throw CorruptBundle(fmt::format("{} is not an index bundle", dir.string()));
    if (!header.contains("format_version") || !header["format_version"].is_number_integer())
        throw CorruptBundle("bundle header lacks a format version");
    int version = header["format_version"].get<int>();
    if (version != kFormatVersion)
        throw VersionMismatch(
            fmt::format("bundle format version {} is not supported (expected {})", version,
                        kFormatVersion));

    std::map<std::string, std::string> files;
    const json& table = header.at("files");
    for (const std::string& name : bundle_files()) {
        if (!table.contains(name))
            throw CorruptBundle(fmt::format("bundle header lists no {}", name));
        std::string bytes = read_file(dir / name);
        if (bytes.size() != table[name].value("bytes", std::size_t{0}))
            throw CorruptBundle(fmt::format("{} is truncated or padded", name));
        if (crc32_of(bytes) != table[name].value("crc32", std::uint32_t{0}))
            throw CorruptBundle(fmt::format("{} fails its checksum", name));
        files[name] = std::move(bytes);
    }

    IndexDatabase db;
    db.format_version = version;
    {
        json j = json::parse(files["manifest.json"], nullptr, false);
        if (j.is_discarded())
            throw CorruptBundle("manifest.json is malformed");
        db.manifest = manifest_from(j);
    }
    {
        json j = json::parse(files["config.json"], nullptr, false);
        if (j.is_discarded())
            throw CorruptBundle("config.json is malformed");
        db.config = config_from(j);
    }
    db.global_summary = files["summary.txt"];

    for (const json& j : parse_jsonl(files["segments.jsonl"], "segments.jsonl")) {
        Segment s;
        s.index = j.at("index").get<std::size_t>();
        s.range = range_from(j.at("range"));
        s.speakers = j.value("speakers", std::vector<std::string>{});
        for (const json& t : j.value("transcript", json::array()))
            s.transcript.push_back(SpeakerTurn{t.at("speaker").get<std::string>(),
                                               TimeRange{t.at("start").get<double>(),
                                                         t.at("end").get<double>()},
                                               t.value("text", "")});
        s.caption = j.value("caption", "");
        s.fused_speaker_info = j.value("fused_speaker_info", "");
        s.composed_text = j.value("composed_text", "");
        for (const json& f : j.value("frame_refs", json::array()))
            s.frame_refs.push_back(FrameRef{f.at(0).get<double>(), f.at(1).get<std::string>()});
        db.segments.push_back(std::move(s));
    }

    for (const json& j : parse_jsonl(files["entities.jsonl"], "entities.jsonl")) {
        CanonicalEntity e;
        e.id = j.at("id").get<std::size_t>();
        e.name = j.value("name", "");
        e.category = entity_category_from_string(j.value("category", "other"));
        e.global_description = j.value("description", "");
        for (const json& seg : j.value("linked_segments", json::array()))
            e.linked_segments.insert(seg.get<std::size_t>());
        for (const json& label : j.value("speaker_labels", json::array()))
            e.speaker_labels.insert(label.get<std::string>());
        for (const json& pair : j.value("recaptions", json::array()))
            e.recaptions[pair.at(0).get<std::size_t>()] = pair.at(1).get<std::string>();
        e.member_mentions = j.value("member_mentions", std::vector<std::size_t>{});
        db.entities.push_back(std::move(e));
    }

    for (const json& j : parse_jsonl(files["scenes.jsonl"], "scenes.jsonl")) {
        Scene s;
        s.id = j.at("id").get<std::size_t>();
        s.first_segment = j.at("first_segment").get<std::size_t>();
        s.last_segment = j.at("last_segment").get<std::size_t>();
        s.summary = j.value("summary", "");
        db.scenes.push_back(std::move(s));
    }

    const std::string& vectors = files["vectors.bin"];
    for (const json& j : parse_jsonl(files["records.jsonl"], "records.jsonl")) {
        VectorRecord rec;
        rec.id.kind = vector_kind_from_string(j.at("kind").get<std::string>());
        rec.id.key = j.at("key").get<std::string>();
        std::size_t offset = j.at("offset").get<std::size_t>();
        std::size_t dim = j.at("dim").get<std::size_t>();
        std::size_t begin = offset * sizeof(float);
        std::size_t bytes = dim * sizeof(float);
        if (begin + bytes > vectors.size())
            throw CorruptBundle("records.jsonl points past the end of vectors.bin");
        rec.vector.resize(dim);
        std::memcpy(rec.vector.data(), vectors.data() + begin, bytes);
        for (const json& r : j.value("ranges", json::array()))
            rec.time_ranges.push_back(range_from(r));
        rec.payload = j.value("payload", "");
        db.store.insert(std::move(rec));
    }

    // The store is the single persisted home of all embeddings; reattach the
    // per-object views.
    for (Segment& s : db.segments) {
        const VectorRecord* text = db.store.find(VectorKind::segment_text, segment_key(s.index));
        const VectorRecord* visual =
            db.store.find(VectorKind::segment_visual, segment_key(s.index));
        if (text == nullptr || visual == nullptr)
            throw CorruptBundle(fmt::format("segment {} has no stored embeddings", s.index));
        s.text_embedding = text->vector;
        s.visual_embedding = visual->vector;
    }
    for (CanonicalEntity& e : db.entities)
        for (const auto& [seg, text] : e.recaptions) {
            const VectorRecord* rec =
                db.store.find(VectorKind::entity_recaption, recaption_key(e.id, seg));
            if (rec == nullptr)
                throw CorruptBundle(
                    fmt::format("entity {} re-caption {} has no stored embedding", e.id, seg));
            e.recaption_embeddings[seg] = rec->vector;
        }

    return db;
}

} // namespace vix
