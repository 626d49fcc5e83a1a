import json

import pytest

TWITTER_TS = "Sat Mar 14 10:00:00 +0000 2020"


def tweet_line(
    tweet_id,
    text="سلام",  # سلام
    lang="fa",
    created_at=TWITTER_TS,
    hashtags=("کرونا",),  # کرونا
    retweeted=False,
    quote=False,
    reply_to=None,
    screen_name="user1",
):
    obj = {
        "id_str": str(tweet_id),
        "full_text": text,
        "lang": lang,
        "created_at": created_at,
        "user": {"screen_name": screen_name},
        "entities": {"hashtags": [{"text": h} for h in hashtags]},
        "is_quote_status": bool(quote),
    }
    if retweeted:
        obj["retweeted_status"] = {"id_str": "9" + str(tweet_id)}
    if reply_to is not None:
        obj["in_reply_to_status_id"] = reply_to
        obj["in_reply_to_status_id_str"] = str(reply_to)
    return json.dumps(obj, ensure_ascii=False)


@pytest.fixture
def mixed_archive(tmp_path):
    """Hand-countable archive: mixed kinds, one malformed line, one
    id-duplicate, one text-duplicate pair, one NFC-variant hashtag.

    Hand counts (dedupe then filter lang=fa, kinds={original}, tag set
    {كرونا-set below}): 10 parsed records, 1 parse error, 1 duplicate
    dropped, 4 retained originals (t1, t7, t8, t9).
    """
    lines = [
        tweet_line("t1", text="سلام دنیا"),
        tweet_line("t2", retweeted=True, quote=True),  # retweet wins precedence
        tweet_line("t3", reply_to="5"),
        tweet_line("t4", quote=True),
        '{"id_str": "broken", "full_te',  # malformed: truncated JSON
        tweet_line("t1", text="duplicate id, different text"),
        tweet_line("t5", lang="en", text="hello world"),
        tweet_line("t6", hashtags=("فوتبال",)),  # فوتبال: not in set
        tweet_line("t7", text="copy pasted text"),
        tweet_line("t8", text="copy pasted text"),
        # NFC variant: precomposed alef-with-hamza in the set, decomposed in the tweet
        tweet_line("t9", hashtags=("أب",)),
    ]
    path = tmp_path / "archive.ndjson"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


HASHTAG_SET = ["کرونا", "أب"]  # کرونا , precomposed أب


@pytest.fixture
def hashtag_file(tmp_path):
    path = tmp_path / "hashtags.txt"
    path.write_text("#" + HASHTAG_SET[0] + "\n" + HASHTAG_SET[1] + "\n", encoding="utf-8")
    return path
