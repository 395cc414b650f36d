#ifndef IVCA_SERVICE_HPP
#define IVCA_SERVICE_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "ivca/records.hpp"
#include "ivca/session.hpp"

namespace httplib {
class Server;
}

namespace ivca {

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Session store behind the HTTP API. Every accepted rating is appended to
/// <data_dir>/<id>.jsonl before the response is produced; the session's
/// configuration lives in <data_dir>/<id>.session.json. Constructing a service
/// over an existing directory rebuilds each session by replaying its log.
class SessionService {
public:
    explicit SessionService(std::filesystem::path data_dir);
    ~SessionService();

    /// Transport-independent entry point. `query` holds decoded query parameters.
    HttpResponse handle(const std::string& method, const std::string& path,
                        const std::map<std::string, std::string>& query, const std::string& body);

    /// Route every request on `server` through handle().
    void mount(httplib::Server& server);

    std::size_t session_count() const;
    const std::filesystem::path& data_dir() const noexcept { return data_dir_; }

private:
    struct Entry;

    HttpResponse create_session(const std::string& body);
    HttpResponse next_design(Entry& e);
    HttpResponse submit_rating(Entry& e, const std::string& body);
    HttpResponse pareto(Entry& e);
    HttpResponse export_log(Entry& e, const std::map<std::string, std::string>& query);

    std::shared_ptr<Entry> find(const std::string& id) const;
    void load_existing();
    std::string fresh_id();

    std::filesystem::path data_dir_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::uint64_t id_counter_ = 0;
};

/// Blocking listen loop.
void serve(SessionService& service, const std::string& host, int port);

/// Session ids become file names, so only [A-Za-z0-9_-] (1..64 chars) is accepted.
bool valid_session_id(const std::string& id);

} // namespace ivca

#endif // IVCA_SERVICE_HPP
